use std::collections::BTreeSet;

use super::{HoldingsLedger, TradeRecord};
use crate::Month;

/// Assets an investor held or traded in the trailing window ending at `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpportunitySet {
    pub investor_id: String,
    pub t: Month,
    pub assets: BTreeSet<String>,
}

impl OpportunitySet {
    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }
}

/// Every asset with a nonzero end-of-month position or any trade in the
/// months `(t - window_months, t]`, fully sold positions included.
pub fn opportunity_set(
    ledger: &HoldingsLedger,
    trades: &[TradeRecord],
    t: Month,
    window_months: u32,
) -> OpportunitySet {
    let from = t.plus(1 - window_months as i64);
    let mut assets = BTreeSet::new();
    for m in Month::range(from.max(ledger.start), t) {
        assets.extend(ledger.holdings_at(m).keys().cloned());
    }
    for tr in trades {
        let m = Month::of(tr.date());
        if m >= from && m <= t {
            assets.insert(tr.asset.clone());
        }
    }
    OpportunitySet {
        investor_id: ledger.investor_id.clone(),
        t,
        assets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::build_holdings;
    use crate::portfolio::holdings::tests::trade;
    use crate::portfolio::Direction::{Buy, Sell};

    fn names(s: &OpportunitySet) -> Vec<&str> {
        s.assets.iter().map(String::as_str).collect()
    }

    #[test]
    fn illustrative_rows() {
        // row 1: hold {1,2}, sell all of 2 at t-1, buy 3 at t
        let trades = vec![
            trade("2006-01-05", "1", Buy, 10.0, 5.0),
            trade("2006-01-05", "2", Buy, 10.0, 5.0),
            trade("2006-02-27", "2", Sell, 10.0, 5.0),
            trade("2006-03-27", "3", Buy, 3.0, 8.0),
        ];
        let l = build_holdings(&trades).unwrap();
        let s = opportunity_set(&l, &trades, "2006-03".parse().unwrap(), 24);
        assert_eq!(names(&s), vec!["1", "2", "3"]);

        // row 2: hold stock 1, sell all of it at t-1, buy ETF 4 at t
        let trades = vec![
            trade("2006-01-05", "1", Buy, 10.0, 5.0),
            trade("2006-02-27", "1", Sell, 10.0, 5.0),
            trade("2006-03-27", "ETF4", Buy, 3.0, 8.0),
        ];
        let l = build_holdings(&trades).unwrap();
        let s = opportunity_set(&l, &trades, "2006-03".parse().unwrap(), 24);
        assert_eq!(names(&s), vec!["1", "ETF4"]);
    }

    #[test]
    fn window_drops_old_activity() {
        let trades = vec![
            trade("2006-01-05", "1", Buy, 10.0, 5.0),
            trade("2006-02-05", "1", Sell, 10.0, 5.0),
        ];
        let mut l = build_holdings(&trades).unwrap();
        l.extend_to("2009-01".parse().unwrap());
        assert!(opportunity_set(&l, &trades, "2009-01".parse().unwrap(), 24).is_empty());
        assert_eq!(opportunity_set(&l, &trades, "2008-01".parse().unwrap(), 24).len(), 1);
    }
}
