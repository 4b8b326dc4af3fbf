//! Seeded factor-model market with predictable drift.
//!
//! Daily return of asset `a` on day `d` in month `m`:
//!
//! ```text
//! r = Σ_f B[a,f]·f_d + (μ_a + Σ_j c_j·x[m-1, j]) / 21 + σ_idio·ε
//! ```
//!
//! Predictors `x` are independent zero-mean AR(1) processes with unit
//! stationary variance, optionally shifted by scheduled shocks. Benchmark
//! ETFs load one-for-one on the first factor.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{predictor_index, AssetClass, AssetId, DailyReturnPanel, PredictorPanel, N_PREDICTORS};
use crate::{seed, Error, Month, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorProcess {
    /// AR(1) coefficient, in [0, 1).
    pub persistence: f64,
}

impl Default for PredictorProcess {
    fn default() -> Self {
        PredictorProcess { persistence: 0.9 }
    }
}

/// Additive level shift of one predictor over an inclusive month range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorShock {
    pub predictor: String,
    pub start: Month,
    pub end: Month,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticMarketSpec {
    pub n_assets: usize,
    /// How many of the `n_assets` are labelled ETF (the last ones).
    pub n_etfs: usize,
    /// Index trackers appended after the regular assets (`BM0`, `BM1`, ...).
    pub n_benchmarks: usize,
    pub n_days: usize,
    pub start: NaiveDate,
    pub n_factors: usize,
    /// Daily factor mean and volatility.
    pub factor_mean: f64,
    pub factor_vol: f64,
    pub loading_mean: f64,
    pub loading_sd: f64,
    /// Daily idiosyncratic volatility.
    pub idio_vol: f64,
    /// Monthly drift common to all assets.
    pub base_drift: f64,
    /// Cross-sectional standard deviation of per-asset monthly drift.
    pub drift_dispersion: f64,
    /// Monthly drift per unit of lagged predictor, keyed by predictor name.
    pub coupling: BTreeMap<String, f64>,
    pub predictors: PredictorProcess,
    pub shocks: Vec<PredictorShock>,
    pub seed: u64,
}

impl Default for SyntheticMarketSpec {
    fn default() -> Self {
        SyntheticMarketSpec {
            n_assets: 20,
            n_etfs: 4,
            n_benchmarks: 2,
            n_days: 252 * 12,
            start: NaiveDate::from_ymd_opt(1993, 1, 1).expect("date"),
            n_factors: 1,
            factor_mean: 0.0003,
            factor_vol: 0.01,
            loading_mean: 1.0,
            loading_sd: 0.3,
            idio_vol: 0.015,
            base_drift: 0.0,
            drift_dispersion: 0.002,
            coupling: BTreeMap::from([("dfy".to_string(), 0.01)]),
            predictors: PredictorProcess::default(),
            shocks: Vec::new(),
            seed: 1,
        }
    }
}

impl SyntheticMarketSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_assets == 0 {
            return Err(Error::config("n_assets", "must be at least 1"));
        }
        if self.n_etfs > self.n_assets {
            return Err(Error::config("n_etfs", "cannot exceed n_assets"));
        }
        if self.n_days < 252 {
            return Err(Error::config("n_days", "must be at least 252"));
        }
        if self.n_factors == 0 {
            return Err(Error::config("n_factors", "must be at least 1"));
        }
        for (field, v) in [
            ("factor_vol", self.factor_vol),
            ("loading_sd", self.loading_sd),
            ("idio_vol", self.idio_vol),
            ("drift_dispersion", self.drift_dispersion),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and nonnegative"));
            }
        }
        let phi = self.predictors.persistence;
        if !(0.0..1.0).contains(&phi) {
            return Err(Error::config("predictors.persistence", "must lie in [0, 1)"));
        }
        for name in self.coupling.keys() {
            if predictor_index(name).is_none() {
                return Err(Error::config("coupling", format!("unknown predictor `{name}`")));
            }
        }
        for s in &self.shocks {
            if predictor_index(&s.predictor).is_none() {
                return Err(Error::config("shocks", format!("unknown predictor `{}`", s.predictor)));
            }
        }
        Ok(())
    }

    pub fn coupling_vector(&self) -> [f64; N_PREDICTORS] {
        let mut c = [0.0; N_PREDICTORS];
        for (name, v) in &self.coupling {
            if let Some(i) = predictor_index(name) {
                c[i] = *v;
            }
        }
        c
    }

    /// Expected daily return of a regular asset, averaged over the loading and
    /// drift distributions, with predictors at their zero mean.
    pub fn expected_daily_return(&self) -> f64 {
        self.loading_mean * self.factor_mean * self.n_factors as f64 + self.base_drift / 21.0
    }
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Generate a daily return panel and its monthly predictor panel. The same
/// spec always yields bit-identical panels.
pub fn generate_synthetic_market(
    spec: &SyntheticMarketSpec,
) -> Result<(DailyReturnPanel, PredictorPanel)> {
    spec.validate()?;
    let dates = business_days(spec.start, spec.n_days);
    let first = Month::of(dates[0]);
    let last = Month::of(*dates.last().expect("nonempty"));
    let months: Vec<Month> = Month::range(first, last).collect();

    // predictors
    let phi = spec.predictors.persistence;
    let innov = Normal::new(0.0, (1.0 - phi * phi).sqrt()).expect("sd");
    let std_normal = Normal::new(0.0, 1.0).expect("sd");
    let mut x: Vec<[f64; N_PREDICTORS]> = Vec::with_capacity(months.len());
    let mut state = [0.0; N_PREDICTORS];
    for (k, s) in state.iter_mut().enumerate() {
        *s = std_normal.sample(&mut seed::rng(spec.seed, &[1, k as u64]));
    }
    let mut prng = seed::rng(spec.seed, &[2]);
    for (t, _) in months.iter().enumerate() {
        if t > 0 {
            for s in state.iter_mut() {
                *s = phi * *s + innov.sample(&mut prng);
            }
        }
        x.push(state);
    }
    for shock in &spec.shocks {
        let k = predictor_index(&shock.predictor).expect("validated");
        for (m, row) in months.iter().zip(x.iter_mut()) {
            if *m >= shock.start && *m <= shock.end {
                row[k] += shock.shift;
            }
        }
    }
    let coupling = spec.coupling_vector();
    // monthly predictable drift from last month's predictors
    let signal: Vec<f64> = (0..months.len())
        .map(|t| {
            if t == 0 {
                return 0.0;
            }
            coupling.iter().zip(&x[t - 1]).map(|(c, v)| c * v).sum()
        })
        .collect();

    // factors
    let mut frng = seed::rng(spec.seed, &[3]);
    let fdist = Normal::new(spec.factor_mean, spec.factor_vol).expect("sd");
    let factors: Vec<Vec<f64>> = (0..dates.len())
        .map(|_| (0..spec.n_factors).map(|_| fdist.sample(&mut frng)).collect())
        .collect();

    let n_total = spec.n_assets + spec.n_benchmarks;
    let mut assets = Vec::with_capacity(n_total);
    let mut loadings = Vec::with_capacity(n_total);
    let mut drifts = Vec::with_capacity(n_total);
    let mut idio = Vec::with_capacity(n_total);
    let ldist = Normal::new(spec.loading_mean, spec.loading_sd).expect("sd");
    let ddist = Normal::new(spec.base_drift, spec.drift_dispersion).expect("sd");
    for a in 0..spec.n_assets {
        let mut arng = seed::rng(spec.seed, &[4, a as u64]);
        let is_etf = a >= spec.n_assets - spec.n_etfs;
        assets.push(if is_etf {
            AssetId::new(format!("E{a:03}"), AssetClass::Etf)
        } else {
            AssetId::new(format!("S{a:03}"), AssetClass::Stock)
        });
        loadings.push(
            (0..spec.n_factors)
                .map(|_| ldist.sample(&mut arng))
                .collect::<Vec<_>>(),
        );
        drifts.push(ddist.sample(&mut arng));
        idio.push(spec.idio_vol);
    }
    for b in 0..spec.n_benchmarks {
        assets.push(AssetId::new(format!("BM{b}"), AssetClass::Etf));
        let mut l = vec![0.0; spec.n_factors];
        l[0] = 1.0;
        loadings.push(l);
        drifts.push(spec.base_drift);
        idio.push(spec.idio_vol * 0.1);
    }

    let month_of_day: Vec<usize> = dates
        .iter()
        .map(|d| Month::of(*d).months_since(first) as usize)
        .collect();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n_total);
    for a in 0..n_total {
        let mut erng = seed::rng(spec.seed, &[5, a as u64]);
        let col = (0..dates.len())
            .map(|d| {
                let common: f64 = loadings[a].iter().zip(&factors[d]).map(|(b, f)| b * f).sum();
                let drift = (drifts[a] + signal[month_of_day[d]]) / 21.0;
                let eps: f64 = std_normal.sample(&mut erng);
                common + drift + idio[a] * eps
            })
            .collect();
        cols.push(col);
    }
    let rows: Vec<Vec<Option<f64>>> = (0..dates.len())
        .map(|d| cols.iter().map(|c| Some(c[d])).collect())
        .collect();
    if let Some((d, a)) = rows
        .iter()
        .enumerate()
        .find_map(|(d, r)| r.iter().position(|v| v.unwrap() <= -1.0).map(|a| (d, a)))
    {
        return Err(Error::Validation(format!(
            "spec produced a return <= -1 for {} on {}; lower the volatilities",
            assets[a].id, dates[d]
        )));
    }
    let panel = DailyReturnPanel::new(dates, assets, rows)?;
    let predictors = PredictorPanel::new(months, x)?;
    Ok((panel, predictors))
}

/// Used by the cohort generator to draw a starting price per asset.
pub(crate) fn initial_price(seed_value: u64, asset: usize) -> f64 {
    let mut rng = seed::rng(seed_value, &[6, asset as u64]);
    rng.random_range(10.0..100.0f64).round()
}
