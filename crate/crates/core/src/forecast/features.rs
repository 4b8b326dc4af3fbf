use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::market::{PredictorPanel, N_PREDICTORS, PREDICTOR_NAMES};
use crate::Month;

pub const N_FEATURES: usize = N_PREDICTORS + 1;

/// Feature names: the asset's own lagged return, then the predictors.
pub const FEATURE_NAMES: [&str; N_FEATURES] = {
    let mut out = ["own_lag"; N_FEATURES];
    let mut i = 0;
    while i < N_PREDICTORS {
        out[i + 1] = PREDICTOR_NAMES[i];
        i += 1;
    }
    out
};

/// Design rows `(r_t, x_t)` with targets `r_{t+1}`, one per formation
/// month `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub months: Vec<Month>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    /// Contiguous block of rows.
    pub fn rows(&self, range: std::ops::Range<usize>) -> FeatureSet {
        FeatureSet {
            months: self.months[range.clone()].to_vec(),
            x: self.x.rows(range.start, range.len()).into_owned(),
            y: self.y.rows(range.start, range.len()).into_owned(),
        }
    }
}

/// The feature row for formation month `t`, if its inputs exist.
pub(crate) fn feature_row(returns: &BTreeMap<Month, f64>, predictors: &PredictorPanel, t: Month) -> Option<[f64; N_FEATURES]> {
    let r = *returns.get(&t)?;
    let x = predictors.at(t)?;
    let mut row = [0.0; N_FEATURES];
    row[0] = r;
    row[1..].copy_from_slice(x);
    Some(row)
}

/// Pair each month's own return and predictors with the next month's
/// return. Months lacking any input are skipped, so no row uses data
/// dated after its formation month except its own target.
pub fn make_features(returns: &BTreeMap<Month, f64>, predictors: &PredictorPanel) -> FeatureSet {
    let mut months = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &t in returns.keys() {
        let (Some(row), Some(target)) = (feature_row(returns, predictors, t), returns.get(&t.next())) else {
            continue;
        };
        months.push(t);
        xs.extend_from_slice(&row);
        ys.push(*target);
    }
    let n = months.len();
    FeatureSet {
        months,
        x: DMatrix::from_row_slice(n, N_FEATURES, &xs),
        y: DVector::from_vec(ys),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn predictors(months: &[Month], value: impl Fn(usize) -> f64) -> PredictorPanel {
        PredictorPanel::new(months.to_vec(), months.iter().enumerate().map(|(i, _)| [value(i); N_PREDICTORS]).collect()).unwrap()
    }

    #[test]
    fn four_months_three_rows() {
        let months: Vec<Month> = Month::range("2000-01".parse().unwrap(), "2000-04".parse().unwrap()).collect();
        let rets: BTreeMap<Month, f64> = months.iter().enumerate().map(|(i, m)| (*m, i as f64)).collect();
        let f = make_features(&rets, &predictors(&months, |i| 10.0 * i as f64));
        assert_eq!(f.len(), 3);
        assert_eq!(f.y.as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(f.x[(2, 0)], 2.0);
        assert_eq!(f.x[(2, 5)], 20.0);
        assert_eq!(FEATURE_NAMES[11], "dfy");
    }

    #[test]
    fn constant_predictors_give_identical_blocks() {
        let months: Vec<Month> = Month::range("2000-01".parse().unwrap(), "2001-01".parse().unwrap()).collect();
        let rets: BTreeMap<Month, f64> = months.iter().enumerate().map(|(i, m)| (*m, 0.01 * i as f64)).collect();
        let f = make_features(&rets, &predictors(&months, |_| 0.3));
        for r in 1..f.len() {
            assert_eq!(f.x.row(r).columns(1, N_PREDICTORS), f.x.row(0).columns(1, N_PREDICTORS));
        }
    }

    #[test]
    fn gaps_drop_rows() {
        let months: Vec<Month> = Month::range("2000-01".parse().unwrap(), "2000-06".parse().unwrap()).collect();
        let mut rets: BTreeMap<Month, f64> = months.iter().map(|m| (*m, 0.0)).collect();
        rets.remove(&"2000-03".parse().unwrap());
        let f = make_features(&rets, &predictors(&months, |_| 0.0));
        let got: Vec<String> = f.months.iter().map(|m| m.to_string()).collect();
        assert_eq!(got, vec!["2000-01", "2000-04", "2000-05"]);
    }
}
