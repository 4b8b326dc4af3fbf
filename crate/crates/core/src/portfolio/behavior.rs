use std::collections::BTreeMap;

use super::valuation::Anchors;
use super::{Direction, HoldingsLedger, PriceBook, TradeRecord};
use crate::portfolio::holdings::DUST;
use crate::Result;

/// Odean sale-day event counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DispositionCounts {
    pub realized_gains: u64,
    pub realized_losses: u64,
    pub paper_gains: u64,
    pub paper_losses: u64,
    pub sale_days: u64,
}

impl DispositionCounts {
    pub fn pgr(&self) -> Option<f64> {
        ratio(self.realized_gains, self.paper_gains)
    }

    pub fn plr(&self) -> Option<f64> {
        ratio(self.realized_losses, self.paper_losses)
    }

    /// PGR − PLR, defined when there was at least one sale day and both
    /// ratios have a nonzero denominator.
    pub fn disposition_effect(&self) -> Option<f64> {
        if self.sale_days == 0 {
            return None;
        }
        Some(self.pgr()? - self.plr()?)
    }
}

fn ratio(realized: u64, paper: u64) -> Option<f64> {
    let d = realized + paper;
    (d > 0).then(|| realized as f64 / d as f64)
}

#[derive(Debug, Clone, Copy, Default)]
struct Lot {
    shares: f64,
    /// Volume-weighted average purchase price.
    cost: f64,
}

/// Count realized and paper gains and losses on every day with a sale.
///
/// Positions and reference prices are taken at the start of the sale day.
/// A sold asset is a realized gain (loss) when the day's volume-weighted
/// sale price is above (below) its average purchase price; every other
/// asset held is a paper gain or loss at that day's market price. Equal
/// prices count as neither.
pub fn disposition_counts(trades: &[TradeRecord], book: &PriceBook) -> Result<DispositionCounts> {
    let mut sorted: Vec<&TradeRecord> = trades.iter().collect();
    sorted.sort_by_key(|t| t.timestamp);
    let mut lots: BTreeMap<&str, Lot> = BTreeMap::new();
    let mut anchors = Anchors::default();
    let mut counts = DispositionCounts::default();
    let mut i = 0;
    while i < sorted.len() {
        let day = sorted[i].date();
        let j = i + sorted[i..].partition_point(|t| t.date() == day);
        let today = &sorted[i..j];

        let mut sales: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for t in today.iter().filter(|t| t.direction == Direction::Sell) {
            let e = sales.entry(t.asset.as_str()).or_default();
            e.0 += t.quantity * t.price;
            e.1 += t.quantity;
        }
        let held: Vec<(&str, Lot)> = lots
            .iter()
            .filter(|(_, l)| l.shares > DUST)
            .map(|(a, l)| (*a, *l))
            .collect();
        if !sales.is_empty() && held.iter().any(|(a, _)| sales.contains_key(a)) {
            counts.sale_days += 1;
            for (asset, lot) in &held {
                let (price, realized) = match sales.get(asset) {
                    Some((value, qty)) => (value / qty, true),
                    None => (anchors.price(book, asset, day)?, false),
                };
                let slot = match (price > lot.cost, price < lot.cost, realized) {
                    (true, _, true) => &mut counts.realized_gains,
                    (_, true, true) => &mut counts.realized_losses,
                    (true, _, false) => &mut counts.paper_gains,
                    (_, true, false) => &mut counts.paper_losses,
                    _ => continue,
                };
                *slot += 1;
            }
        }

        for t in today {
            let lot = lots.entry(t.asset.as_str()).or_default();
            match t.direction {
                Direction::Buy => {
                    let shares = lot.shares + t.quantity;
                    lot.cost = (lot.cost * lot.shares + t.price * t.quantity) / shares;
                    lot.shares = shares;
                }
                Direction::Sell => {
                    lot.shares -= t.quantity;
                    if lot.shares <= DUST {
                        *lot = Lot::default();
                    }
                }
            }
            anchors.record(t);
        }
        i = j;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralMetrics {
    pub investor_id: String,
    pub counts: DispositionCounts,
    /// PGR − PLR; `None` when undefined.
    pub disposition_effect: Option<f64>,
    /// Trades per month over the ledger's active months.
    pub trading_frequency: f64,
    /// 1..=4 once [`assign_frequency_quartiles`] has run.
    pub frequency_quartile: Option<u8>,
}

pub fn behavioral_metrics(
    trades: &[TradeRecord],
    ledger: &HoldingsLedger,
    book: &PriceBook,
) -> Result<BehavioralMetrics> {
    let counts = disposition_counts(trades, book)?;
    let months = ledger.months().count().max(1);
    Ok(BehavioralMetrics {
        investor_id: ledger.investor_id.clone(),
        counts,
        disposition_effect: counts.disposition_effect(),
        trading_frequency: trades.len() as f64 / months as f64,
        frequency_quartile: None,
    })
}

/// Quartiles of trading frequency over the given cross-section, ties
/// broken by investor id.
pub fn assign_frequency_quartiles(metrics: &mut [BehavioralMetrics]) {
    let n = metrics.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        metrics[a]
            .trading_frequency
            .total_cmp(&metrics[b].trading_frequency)
            .then_with(|| metrics[a].investor_id.cmp(&metrics[b].investor_id))
    });
    for (rank, i) in order.into_iter().enumerate() {
        metrics[i].frequency_quartile = Some((1 + rank * 4 / n) as u8);
    }
}
