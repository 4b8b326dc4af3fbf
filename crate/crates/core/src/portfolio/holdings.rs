use std::collections::BTreeMap;

use super::{Direction, TradeRecord};
use crate::{Error, Month, Result};

/// Positions below this are treated as fully liquidated.
pub(crate) const DUST: f64 = 1e-9;

/// End-of-month share positions and monthly net external flows for one
/// investor. Month `i` is `start.plus(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldingsLedger {
    pub investor_id: String,
    pub start: Month,
    positions: Vec<BTreeMap<String, f64>>,
    /// Buy value minus sell value per month.
    flows: Vec<f64>,
}

impl HoldingsLedger {
    pub fn end(&self) -> Month {
        self.start.plus(self.positions.len() as i64 - 1)
    }

    pub fn months(&self) -> impl Iterator<Item = Month> + '_ {
        (0..self.positions.len()).map(|i| self.start.plus(i as i64))
    }

    /// Shares held at the end of `m`. Before the first trade month the
    /// portfolio is empty; after the last month positions carry forward.
    pub fn holdings_at(&self, m: Month) -> &BTreeMap<String, f64> {
        static EMPTY: BTreeMap<String, f64> = BTreeMap::new();
        if m < self.start {
            return &EMPTY;
        }
        let i = (m.months_since(self.start) as usize).min(self.positions.len() - 1);
        &self.positions[i]
    }

    pub fn net_flow(&self, m: Month) -> f64 {
        if m < self.start {
            return 0.0;
        }
        let i = m.months_since(self.start) as usize;
        self.flows.get(i).copied().unwrap_or(0.0)
    }

    /// Carry the final positions forward through `m` with zero flows.
    pub fn extend_to(&mut self, m: Month) {
        while self.end() < m {
            let last = self.positions.last().cloned().unwrap_or_default();
            self.positions.push(last);
            self.flows.push(0.0);
        }
    }
}

/// Replay one investor's trades into end-of-month holdings. Trades are
/// sorted by timestamp first; a sale larger than the current position fails.
pub fn build_holdings(trades: &[TradeRecord]) -> Result<HoldingsLedger> {
    let first = trades
        .first()
        .ok_or_else(|| Error::Empty("no trades to build holdings from".into()))?;
    let investor = first.investor_id.clone();
    let mut sorted: Vec<&TradeRecord> = trades.iter().collect();
    sorted.sort_by_key(|t| t.timestamp);
    let start = Month::of(sorted[0].date());
    let end = Month::of(sorted.last().expect("nonempty").date());
    let n = end.months_since(start) as usize + 1;
    let mut positions = Vec::with_capacity(n);
    let mut flows = vec![0.0; n];
    let mut current: BTreeMap<String, f64> = BTreeMap::new();
    let mut it = sorted.into_iter().peekable();
    for (i, m) in Month::range(start, end).enumerate() {
        while let Some(t) = it.next_if(|t| Month::of(t.date()) == m) {
            if t.investor_id != investor {
                return Err(Error::Validation(format!(
                    "build_holdings got trades of both {investor} and {}",
                    t.investor_id
                )));
            }
            t.validate()?;
            let held = current.get(&t.asset).copied().unwrap_or(0.0);
            let next = match t.direction {
                Direction::Buy => held + t.quantity,
                Direction::Sell => {
                    if t.quantity > held * (1.0 + 1e-12) + DUST {
                        return Err(Error::Oversell {
                            investor: investor.clone(),
                            asset: t.asset.clone(),
                            date: t.date().to_string(),
                            quantity: t.quantity,
                            held,
                        });
                    }
                    held - t.quantity
                }
            };
            if next <= DUST {
                current.remove(&t.asset);
            } else {
                current.insert(t.asset.clone(), next);
            }
            flows[i] += t.direction.sign() * t.value();
        }
        positions.push(current.clone());
    }
    Ok(HoldingsLedger {
        investor_id: investor,
        start,
        positions,
        flows,
    })
}
