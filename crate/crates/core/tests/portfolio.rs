use std::collections::BTreeMap;

use alterego_core::market::{AssetId, DailyReturnPanel};
use alterego_core::portfolio::{
    behavioral_metrics, build_holdings, modified_dietz_return, opportunity_set, Direction, PriceBook, TradeRecord,
};
use alterego_core::Month;
use chrono::{NaiveDate, NaiveDateTime};
use proptest::prelude::*;

const ASSETS: [&str; 3] = ["X", "Y", "Z"];

fn at(day: u64) -> NaiveDateTime {
    (NaiveDate::from_ymd_opt(2004, 1, 5).unwrap() + chrono::Days::new(day)).and_hms_opt(10, 0, 0).unwrap()
}

/// A random buy/sell stream that never oversells: sells take a fraction
/// of the current position.
fn trade_stream() -> impl Strategy<Value = Vec<TradeRecord>> {
    prop::collection::vec((0u64..4, 0usize..3, any::<bool>(), 0.1f64..1.0, 5.0f64..50.0), 1..40).prop_map(|steps| {
        let mut held = [0.0f64; 3];
        let mut day = 0;
        let mut out = Vec::new();
        for (gap, a, sell, frac, price) in steps {
            day += gap * 5;
            let (direction, quantity) = if sell && held[a] > 0.0 {
                let q = if frac > 0.7 { held[a] } else { (held[a] * frac).max(1.0).min(held[a]) };
                (Direction::Sell, q)
            } else {
                (Direction::Buy, (frac * 100.0).round().max(1.0))
            };
            held[a] += direction.sign() * quantity;
            out.push(TradeRecord {
                investor_id: "I".into(),
                timestamp: at(day),
                asset: ASSETS[a].into(),
                direction,
                quantity,
                price: price.round(),
            });
        }
        out
    })
}

fn flat_book() -> PriceBook {
    let dates: Vec<NaiveDate> = (0..700).map(|i| NaiveDate::from_ymd_opt(2004, 1, 5).unwrap() + chrono::Days::new(i)).collect();
    let rows = vec![vec![Some(0.0); 3]; dates.len()];
    PriceBook::from_panel(&DailyReturnPanel::new(dates, ASSETS.iter().map(|a| AssetId::stock(*a)).collect(), rows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ledger_matches_trade_replay_and_stays_long(trades in trade_stream()) {
        let ledger = build_holdings(&trades).unwrap();
        for m in ledger.months() {
            let mut oracle: BTreeMap<&str, f64> = BTreeMap::new();
            for t in trades.iter().filter(|t| Month::of(t.date()) <= m) {
                *oracle.entry(t.asset.as_str()).or_default() += t.direction.sign() * t.quantity;
            }
            let held = ledger.holdings_at(m);
            for (a, q) in &oracle {
                prop_assert!(*q >= -1e-9);
                let got = held.get(*a).copied().unwrap_or(0.0);
                prop_assert!((got - q).abs() <= 1e-9, "{a} in {m}: {got} vs {q}");
            }
            prop_assert!(held.values().all(|q| *q > 0.0));
        }
    }

    #[test]
    fn opportunity_set_is_monotone_in_window(trades in trade_stream()) {
        let ledger = build_holdings(&trades).unwrap();
        for m in ledger.months() {
            let short = opportunity_set(&ledger, &trades, m, 18);
            let long = opportunity_set(&ledger, &trades, m, 24);
            prop_assert!(short.assets.is_subset(&long.assets));
        }
    }

    #[test]
    fn disposition_effect_is_bounded(trades in trade_stream()) {
        let ledger = build_holdings(&trades).unwrap();
        let b = behavioral_metrics(&trades, &ledger, &flat_book()).unwrap();
        if let Some(p) = b.counts.pgr() { prop_assert!((0.0..=1.0).contains(&p)); }
        if let Some(p) = b.counts.plr() { prop_assert!((0.0..=1.0).contains(&p)); }
        if let Some(de) = b.disposition_effect { prop_assert!((-1.0..=1.0).contains(&de)); }
    }

    #[test]
    fn no_flow_dietz_is_value_ratio(begin in 1e-3f64..1e7, growth in 0.01f64..3.0) {
        let m: Month = "2006-07".parse().unwrap();
        let end = begin * growth;
        prop_assert_eq!(modified_dietz_return(m, begin, end, &[]), Some(end / begin - 1.0));
    }
}
