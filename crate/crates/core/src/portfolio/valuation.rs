use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;

use super::{modified_dietz_return, CashFlow, HoldingsLedger, TradeRecord};
use crate::market::DailyReturnPanel;
use crate::{Error, Month, Result};

/// Price levels implied by total returns. A holding is valued at the
/// investor's own last trade price for the asset, rolled forward by the
/// asset's cumulative return since that trade.
#[derive(Debug, Clone)]
pub struct PriceBook {
    dates: Vec<NaiveDate>,
    ids: HashMap<String, usize>,
    index: Vec<Vec<f64>>,
}

impl PriceBook {
    pub fn from_panel(panel: &DailyReturnPanel) -> Self {
        PriceBook {
            dates: panel.dates().to_vec(),
            ids: panel
                .assets()
                .iter()
                .enumerate()
                .map(|(i, a)| (a.id.clone(), i))
                .collect(),
            index: panel.growth_index(),
        }
    }

    fn level(&self, asset: usize, date: NaiveDate) -> f64 {
        let n = self.dates.partition_point(|d| *d <= date);
        if n == 0 {
            1.0
        } else {
            self.index[asset][n - 1]
        }
    }

    fn asset(&self, id: &str) -> Result<usize> {
        self.ids
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownAsset(id.to_string()))
    }

    /// Price on `date` given a trade at `anchor_price` on `anchor_date`.
    pub fn price(&self, id: &str, date: NaiveDate, anchor_date: NaiveDate, anchor_price: f64) -> Result<f64> {
        let a = self.asset(id)?;
        Ok(anchor_price * self.level(a, date) / self.level(a, anchor_date))
    }
}

/// Last trade (date, price) per asset, used as valuation anchors.
#[derive(Debug, Default, Clone)]
pub(crate) struct Anchors(BTreeMap<String, (NaiveDate, f64)>);

impl Anchors {
    pub(crate) fn record(&mut self, t: &TradeRecord) {
        self.0.insert(t.asset.clone(), (t.date(), t.price));
    }

    pub(crate) fn price(&self, book: &PriceBook, asset: &str, date: NaiveDate) -> Result<f64> {
        let (d, p) = self
            .0
            .get(asset)
            .ok_or_else(|| Error::Validation(format!("no trade price recorded for {asset}")))?;
        book.price(asset, date, *d, *p)
    }
}

fn market_value(
    positions: &BTreeMap<String, f64>,
    anchors: &Anchors,
    book: &PriceBook,
    date: NaiveDate,
) -> Result<f64> {
    positions
        .iter()
        .map(|(a, q)| Ok(q * anchors.price(book, a, date)?))
        .sum()
}

/// Monthly Modified Dietz returns from the ledger's first month through
/// `through`. Months with an undefined return are absent from the map.
pub fn investor_returns(
    ledger: &HoldingsLedger,
    trades: &[TradeRecord],
    book: &PriceBook,
    through: Month,
) -> Result<BTreeMap<Month, f64>> {
    let mut sorted: Vec<&TradeRecord> = trades.iter().collect();
    sorted.sort_by_key(|t| t.timestamp);
    let mut it = sorted.into_iter().peekable();
    let mut anchors = Anchors::default();
    let mut out = BTreeMap::new();
    let mut begin_value = 0.0;
    for m in Month::range(ledger.start, through) {
        let mut flows = Vec::new();
        while let Some(t) = it.next_if(|t| Month::of(t.date()) <= m) {
            anchors.record(t);
            flows.push(CashFlow {
                date: t.date(),
                amount: t.direction.sign() * t.value(),
            });
        }
        let end_value = market_value(ledger.holdings_at(m), &anchors, book, m.last_day())?;
        if let Some(r) = modified_dietz_return(m, begin_value, end_value, &flows) {
            out.insert(m, r);
        }
        begin_value = end_value;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::AssetId;
    use crate::portfolio::build_holdings;
    use crate::portfolio::holdings::tests::trade;
    use crate::portfolio::Direction;

    fn panel() -> DailyReturnPanel {
        // one trading day per week, asset X gains 1% per day, Y flat
        let start = NaiveDate::from_ymd_opt(2004, 1, 5).unwrap();
        let dates: Vec<_> = (0..20).map(|i| start + chrono::Days::new(7 * i)).collect();
        let rows = vec![vec![Some(0.01), Some(0.0)]; 20];
        DailyReturnPanel::new(dates, vec![AssetId::stock("X"), AssetId::stock("Y")], rows).unwrap()
    }

    #[test]
    fn buy_and_hold_return_is_price_growth() {
        let p = panel();
        let book = PriceBook::from_panel(&p);
        let trades = vec![trade("2004-01-05", "X", Direction::Buy, 10.0, 20.0)];
        let l = build_holdings(&trades).unwrap();
        let r = investor_returns(&l, &trades, &book, "2004-03".parse().unwrap()).unwrap();
        // February has four weekly observations (2, 9, 16, 23)
        let feb = r[&"2004-02".parse().unwrap()];
        assert!((feb - (1.01f64.powi(4) - 1.0)).abs() < 1e-12, "{feb}");
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn unknown_asset_is_an_error() {
        let book = PriceBook::from_panel(&panel());
        let trades = vec![trade("2004-01-05", "ZZ", Direction::Buy, 1.0, 1.0)];
        let l = build_holdings(&trades).unwrap();
        assert!(investor_returns(&l, &trades, &book, "2004-02".parse().unwrap()).is_err());
    }
}
