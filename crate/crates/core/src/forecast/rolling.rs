use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;

use super::elastic_net::fit_elastic_net;
use super::features::{feature_row, make_features, FeatureSet, N_FEATURES};
use super::forest::fit_random_forest;
use super::linear::fit_ols;
use super::neural::fit_neural_net;
use super::panel::{ForecastPanel, ForecastRecord};
use super::selection::{ensemble_predict, evaluate_and_select, KindErrors};
use super::ModelKind;
use crate::analytics::quantile;
use crate::market::{MonthlyReturnPanel, PredictorPanel, PREDICTOR_NAMES};
use crate::{seed, Error, Month, Result};

/// Assets with fewer feature rows in a window are skipped there.
pub const MIN_USABLE_MONTHS: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RollingConfig {
    pub window_months: usize,
    pub step_months: usize,
    pub train_frac: f64,
    pub validation_frac: f64,
    pub seed: u64,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig {
            window_months: 120,
            step_months: 12,
            train_frac: 0.7,
            validation_frac: 0.2,
            seed: 0,
        }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_months < 2 || self.step_months == 0 {
            return Err(Error::config("window_months", "window must span at least 2 months and advance by at least 1"));
        }
        let test = 1.0 - self.train_frac - self.validation_frac;
        if !(self.train_frac > 0.0 && self.validation_frac > 0.0 && test > 0.0) {
            return Err(Error::config("train_frac", "train, validation and test shares must all be positive"));
        }
        Ok(())
    }

    /// Row counts (train, validation, test) for `n` chronological rows.
    pub fn split(&self, n: usize) -> (usize, usize, usize) {
        let train = (self.train_frac * n as f64).round() as usize;
        let val = (self.validation_frac * n as f64).round() as usize;
        let train = train.min(n);
        let val = val.min(n - train);
        (train, val, n - train - val)
    }
}

/// Start offsets of the windows that fit in `n_months`.
pub fn window_starts(n_months: usize, window: usize, step: usize) -> Vec<usize> {
    if n_months < window || step == 0 {
        return Vec::new();
    }
    (0..=(n_months - window) / step).map(|i| i * step).collect()
}

/// One asset's models in one window.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetFit {
    pub asset: String,
    pub errors: KindErrors,
    pub winner: ModelKind,
    /// Elastic net coefficients on standardized features, own lag first.
    pub en_std_coef: Vec<f64>,
    pub en_alpha: f64,
    pub en_lambda: f64,
    /// Winner forecasts keyed by formation month.
    pub forecasts: Vec<(Month, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub index: usize,
    pub start: Month,
    pub end: Month,
    pub fits: Vec<AssetFit>,
    /// Assets left out of the window, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl WindowResult {
    /// Share of assets won by each kind; sums to 1 when any asset was fit.
    pub fn win_fractions(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for f in &self.fits {
            out[f.winner.index()] += 1.0;
        }
        let n = self.fits.len().max(1) as f64;
        out.map(|c| c / n)
    }

    /// Cross-sectional (mean, median) of test MSE and MAE per kind.
    pub fn error_summary(&self) -> [(f64, f64, f64, f64); 5] {
        std::array::from_fn(|k| {
            let mse: Vec<f64> = self.fits.iter().map(|f| f.errors.mse[k]).collect();
            let mae: Vec<f64> = self.fits.iter().map(|f| f.errors.mae[k]).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            let med = |v: &[f64]| quantile(v, 0.5).unwrap_or(f64::NAN);
            (mean(&mse), med(&mse), mean(&mae), med(&mae))
        })
    }
}

/// Predictors ranked by the sum over assets of squared standardized
/// elastic net coefficients, with each predictor's share of the total.
/// Ties keep the canonical predictor order.
pub fn en_l2_ranking(fits: &[AssetFit]) -> Vec<(&'static str, f64)> {
    let mut sums = [0.0; N_FEATURES - 1];
    for f in fits {
        for (s, b) in sums.iter_mut().zip(&f.en_std_coef[1..]) {
            *s += b * b;
        }
    }
    let total: f64 = sums.iter().sum();
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|i| (PREDICTOR_NAMES[i], if total > 0.0 { sums[i] / total } else { 0.0 }))
        .collect()
}

/// Fit the five kinds on one asset's window rows and forecast with the
/// winner over the test rows plus any `extra` formation months.
fn fit_asset(
    asset: &str,
    rows: &FeatureSet,
    cfg: &RollingConfig,
    seed_value: u64,
    extra: &[(Month, [f64; N_FEATURES])],
) -> Result<AssetFit> {
    let (n_train, n_val, n_test) = cfg.split(rows.len());
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::InsufficientHistory(format!("{asset}: {} rows cannot be split", rows.len())));
    }
    let train = rows.rows(0..n_train);
    let val = rows.rows(n_train..n_train + n_val);
    let test = rows.rows(n_train + n_val..rows.len());

    let ols = fit_ols(&train.x, &train.y, true)?;
    let en = fit_elastic_net(&train.x, &train.y, &val.x, &val.y)?;
    let rf = fit_random_forest(&train.x, &train.y, &val.x, &val.y, seed::derive(seed_value, &[seed::key("rf")]))?;
    let nn = fit_neural_net(&train.x, &train.y, &val.x, &val.y, seed::derive(seed_value, &[seed::key("nn")]))?;

    let mut preds = vec![
        (ModelKind::Ols, ols.predict(&test.x)),
        (ModelKind::En, en.model.predict(&test.x)),
        (ModelKind::Rf, rf.forest.predict(&test.x)),
        (ModelKind::Nn, nn.predict(&test.x)),
    ];
    let comb = ensemble_predict(&preds)?;
    preds.push((ModelKind::Comb, comb));
    let (errors, winner) = evaluate_and_select(&preds, &test.y)?;

    let predict_row = |x: &[f64]| match winner {
        ModelKind::Ols => ols.predict_row(x),
        ModelKind::En => en.model.predict_row(x),
        ModelKind::Rf => rf.forest.predict_row(x),
        ModelKind::Nn => nn.predict_row(x),
        ModelKind::Comb => {
            (ols.predict_row(x) + en.model.predict_row(x) + rf.forest.predict_row(x) + nn.predict_row(x)) / 4.0
        }
    };
    let winner_test: &DVector<f64> = &preds[winner.index()].1;
    let mut forecasts: Vec<(Month, f64)> = test.months.iter().copied().zip(winner_test.iter().copied()).collect();
    forecasts.extend(extra.iter().map(|(m, x)| (*m, predict_row(x))));
    Ok(AssetFit {
        asset: asset.to_string(),
        errors,
        winner,
        en_std_coef: en.std_coef.clone(),
        en_alpha: en.alpha,
        en_lambda: en.lambda,
        forecasts,
    })
}

/// Train every asset on ten-year windows advanced annually, each split
/// chronologically 70/20/10. The forecast panel holds each window's
/// test-row forecasts from the per-asset winner; formation months after
/// the last window are forecast by the last window's winners.
pub fn rolling_retrain(
    returns: &MonthlyReturnPanel,
    predictors: &PredictorPanel,
    cfg: &RollingConfig,
) -> Result<(Vec<WindowResult>, ForecastPanel)> {
    cfg.validate()?;
    let calendar: Vec<Month> = returns
        .months
        .iter()
        .copied()
        .filter(|m| predictors.at(*m).is_some())
        .collect();
    let starts = window_starts(calendar.len(), cfg.window_months, cfg.step_months);
    if starts.is_empty() {
        log::warn!(
            "{} aligned months cannot hold a {}-month window; no forecasts",
            calendar.len(),
            cfg.window_months
        );
    }
    let series: Vec<BTreeMap<Month, f64>> = (0..returns.assets.len()).map(|a| returns.series_map(a)).collect();
    let mut windows = Vec::with_capacity(starts.len());
    let mut records: BTreeMap<(Month, String), ForecastRecord> = BTreeMap::new();
    for (w, &s) in starts.iter().enumerate() {
        let (start, end) = (calendar[s], calendar[s + cfg.window_months - 1]);
        let last = w + 1 == starts.len();
        let results: Vec<(String, Result<AssetFit>)> = returns
            .assets
            .par_iter()
            .enumerate()
            .map(|(a, id)| {
                let in_window: BTreeMap<Month, f64> = series[a].range(start..=end).map(|(m, r)| (*m, *r)).collect();
                let rows = make_features(&in_window, predictors);
                if rows.len() < MIN_USABLE_MONTHS {
                    let msg = format!("{} usable months in window", rows.len());
                    return (id.id.clone(), Err(Error::InsufficientHistory(msg)));
                }
                let extra: Vec<(Month, [f64; N_FEATURES])> = if last {
                    let after = *rows.months.last().expect("rows");
                    series[a]
                        .range(after.next()..)
                        .filter_map(|(m, _)| feature_row(&series[a], predictors, *m).map(|x| (*m, x)))
                        .collect()
                } else {
                    Vec::new()
                };
                let seed_value = seed::derive(cfg.seed, &[w as u64, seed::key(&id.id)]);
                (id.id.clone(), fit_asset(&id.id, &rows, cfg, seed_value, &extra))
            })
            .collect();
        let mut fits = Vec::new();
        let mut skipped = Vec::new();
        for (asset, r) in results {
            match r {
                Ok(fit) => fits.push(fit),
                Err(e @ (Error::InsufficientHistory(_) | Error::Diverged(_))) => {
                    log::info!("window {w}: skipping {asset}: {e}");
                    skipped.push((asset, e.to_string()));
                }
                Err(e) => return Err(e),
            }
        }
        for fit in &fits {
            for &(m, f) in &fit.forecasts {
                records.insert(
                    (m, fit.asset.clone()),
                    ForecastRecord {
                        month: m,
                        asset: fit.asset.clone(),
                        forecast: f,
                        winner: fit.winner,
                        mse: fit.errors.mse,
                    },
                );
            }
        }
        windows.push(WindowResult {
            index: w,
            start,
            end,
            fits,
            skipped,
        });
    }
    Ok((windows, ForecastPanel::new(records.into_values().collect())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_years_three_windows() {
        assert_eq!(window_starts(144, 120, 12), vec![0, 12, 24]);
        assert_eq!(window_starts(119, 120, 12), Vec::<usize>::new());
        assert_eq!(window_starts(131, 120, 12), vec![0]);
    }

    #[test]
    fn split_counts() {
        let c = RollingConfig::default();
        assert_eq!(c.split(119), (83, 24, 12));
        assert_eq!(c.split(10), (7, 2, 1));
    }

    #[test]
    fn ranking_single_asset_and_ties() {
        let mut coef = vec![0.0; N_FEATURES];
        coef[11] = 0.5; // dfy
        coef[3] = -0.2; // ep
        let fit = AssetFit {
            asset: "a".into(),
            errors: KindErrors { mse: [0.0; 5], mae: [0.0; 5] },
            winner: ModelKind::En,
            en_std_coef: coef,
            en_alpha: 1.0,
            en_lambda: 0.1,
            forecasts: Vec::new(),
        };
        let r = en_l2_ranking(&[fit]);
        assert_eq!(r.len(), 21);
        assert_eq!(r[0].0, "dfy");
        assert_eq!(r[1].0, "ep");
        // remaining zero-weight predictors keep canonical order
        assert_eq!(r[2].0, "dp");
        assert_eq!(r[3].0, "dy");
        assert!((r[0].1 - 0.25 / 0.29).abs() < 1e-12);
    }
}
