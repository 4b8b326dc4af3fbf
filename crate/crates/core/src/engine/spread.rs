use std::collections::BTreeMap;
use std::path::Path;

use super::track::AlterEgoTrack;
use crate::fsio::{create, csv_err};
use crate::numfmt::fmt12;
use crate::{Error, Month, Result};

const MIN_OVERLAP: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSeries {
    pub investor_id: String,
    pub strategy: String,
    pub spreads: BTreeMap<Month, f64>,
    /// `12 × mean monthly spread × 100`.
    pub annualized_pct: f64,
}

/// `a − b` over the months both series cover.
pub fn spread_between(
    investor_id: &str,
    label: &str,
    a: &BTreeMap<Month, f64>,
    b: &BTreeMap<Month, f64>,
) -> Result<SpreadSeries> {
    let spreads: BTreeMap<Month, f64> =
        a.iter().filter_map(|(m, x)| b.get(m).map(|y| (*m, x - y))).collect();
    if spreads.is_empty() {
        return Err(Error::NoOverlap);
    }
    if spreads.len() < MIN_OVERLAP {
        return Err(Error::InsufficientOverlap(spreads.len()));
    }
    let mean = spreads.values().sum::<f64>() / spreads.len() as f64;
    Ok(SpreadSeries {
        investor_id: investor_id.to_string(),
        strategy: label.to_string(),
        spreads,
        annualized_pct: 1200.0 * mean,
    })
}

/// Robo return minus investor return, month by month.
pub fn compute_spread(track: &AlterEgoTrack, investor_returns: &BTreeMap<Month, f64>) -> Result<SpreadSeries> {
    spread_between(&track.investor_id, &track.strategy.to_string(), &track.returns(), investor_returns)
}

/// Spread of `returns` against a benchmark series. Months the benchmark
/// does not cover are dropped with a warning.
pub fn benchmark_spread(
    investor_id: &str,
    label: &str,
    returns: &BTreeMap<Month, f64>,
    benchmark: &BTreeMap<Month, f64>,
) -> Result<SpreadSeries> {
    let gaps = returns.keys().filter(|m| !benchmark.contains_key(m)).count();
    if gaps > 0 {
        log::warn!("{investor_id}/{label}: benchmark misses {gaps} months; dropped");
    }
    spread_between(investor_id, label, returns, benchmark)
}

pub fn write_spreads(spreads: &[SpreadSeries], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["investor_id", "strategy", "annualized_spread_pct"]).map_err(|e| csv_err(path, e))?;
    for s in spreads {
        w.write_record([s.investor_id.as_str(), s.strategy.as_str(), fmt12(s.annualized_pct).as_str()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(start: &str, values: &[f64]) -> BTreeMap<Month, f64> {
        let m0: Month = start.parse().unwrap();
        values.iter().enumerate().map(|(i, v)| (m0.plus(i as i64), *v)).collect()
    }

    #[test]
    fn constant_legs() {
        let s = spread_between("i", "x", &series("2005-01", &[0.05; 6]), &series("2005-01", &[0.03; 6])).unwrap();
        assert!(s.spreads.values().all(|v| (v - 0.02).abs() < 1e-15));
        assert!((s.annualized_pct - 24.0).abs() < 1e-12);
    }

    #[test]
    fn identical_legs_zero() {
        let a = series("2005-01", &[0.01, -0.02, 0.03, 0.0, 0.07]);
        let s = spread_between("i", "x", &a, &a).unwrap();
        assert!(s.spreads.values().all(|v| *v == 0.0));
        assert_eq!(s.annualized_pct, 0.0);
    }

    #[test]
    fn overlap_errors() {
        let a = series("2005-01", &[0.01; 6]);
        assert!(matches!(spread_between("i", "x", &a, &series("2006-01", &[0.0; 6])), Err(Error::NoOverlap)));
        assert!(matches!(
            spread_between("i", "x", &a, &series("2005-04", &[0.0; 6])),
            Err(Error::InsufficientOverlap(3))
        ));
    }

    #[test]
    fn benchmark_plus_one_percent() {
        let b = series("2005-01", &[0.004, -0.01, 0.02, 0.0, 0.013, 0.001]);
        let r: BTreeMap<Month, f64> = b.iter().map(|(m, v)| (*m, v + 0.01)).collect();
        let s = benchmark_spread("i", "spy", &r, &b).unwrap();
        assert!((s.annualized_pct - 12.0).abs() < 1e-12);
        let flat = benchmark_spread("i", "spy", &b, &b).unwrap();
        assert_eq!(flat.annualized_pct, 0.0);
    }
}
