use std::collections::BTreeMap;
use std::path::Path;

use crate::analytics::median;
use crate::fsio::{create, csv_err};
use crate::numfmt::fmt12;
use crate::{Error, Month, Result};

/// Medians are taken month by month, so a path is not the history of any
/// single investor or robot.
pub const PATH_CAUTION: &str = "compounded cross-sectional medians; not the path of any single investor or robot";

#[derive(Debug, Clone, PartialEq)]
pub struct MedianPath {
    pub series: String,
    /// Index value at the end of each month, starting from 1.
    pub points: Vec<(Month, f64)>,
}

/// For each series, compound the monthly cross-sectional median return:
/// `V_t = V_{t−1}(1 + median_t)` with `V = 1` before the first month.
pub fn compound_median_paths(series: &[(String, Vec<&BTreeMap<Month, f64>>)]) -> Vec<MedianPath> {
    series
        .iter()
        .map(|(label, members)| {
            let mut by_month: BTreeMap<Month, Vec<f64>> = BTreeMap::new();
            for m in members {
                for (month, r) in m.iter() {
                    by_month.entry(*month).or_default().push(*r);
                }
            }
            let mut v = 1.0;
            let points = by_month
                .into_iter()
                .map(|(month, rs)| {
                    v *= 1.0 + median(&rs).expect("month has a member");
                    (month, v)
                })
                .collect();
            MedianPath {
                series: label.clone(),
                points,
            }
        })
        .collect()
}

pub fn write_paths(paths: &[MedianPath], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["month", "series", "index_value"]).map_err(|e| csv_err(path, e))?;
    for p in paths {
        for (m, v) in &p.points {
            w.write_record([m.to_string(), p.series.clone(), fmt12(*v)]).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_one_percent_for_a_year() {
        let m0: Month = "2004-01".parse().unwrap();
        let s: BTreeMap<Month, f64> = (0..12).map(|i| (m0.plus(i), 0.01)).collect();
        let paths = compound_median_paths(&[("x".into(), vec![&s, &s, &s])]);
        let last = paths[0].points.last().unwrap().1;
        assert!((last - 1.01f64.powi(12)).abs() < 1e-14);
    }

    #[test]
    fn zero_median_is_flat() {
        let m0: Month = "2004-01".parse().unwrap();
        let up: BTreeMap<Month, f64> = (0..6).map(|i| (m0.plus(i), 0.05)).collect();
        let flat: BTreeMap<Month, f64> = (0..6).map(|i| (m0.plus(i), 0.0)).collect();
        let down: BTreeMap<Month, f64> = (0..6).map(|i| (m0.plus(i), -0.05)).collect();
        let paths = compound_median_paths(&[("x".into(), vec![&up, &flat, &down])]);
        assert!(paths[0].points.iter().all(|(_, v)| *v == 1.0));
    }
}
