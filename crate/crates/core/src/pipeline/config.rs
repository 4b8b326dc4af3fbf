use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{BootstrapSpec, CrisisCalendar};
use crate::cohort::CohortSpec;
use crate::engine::{Rebalance, StrategyKind, StrategySpec};
use crate::forecast::RollingConfig;
use crate::market::{PredictorShock, SyntheticMarketSpec};
use crate::portfolio::AdmissionRule;
use crate::{seed, Error, Month, Result};

/// Which holdings an investor's book and robot are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Stocks and ETFs.
    All,
    /// Stock trades only.
    Equities,
}

impl Scope {
    pub fn label(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Equities => "equities",
        }
    }
}

/// Input files. Unset entries default to the files `generate` writes under
/// `<out>/data` (or `<out>/forecast` for the forecast panel).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub universe: Option<PathBuf>,
    pub daily_returns: Option<PathBuf>,
    pub predictors: Option<PathBuf>,
    pub trades: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub forecasts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every component seed is derived from it.
    pub seed: u64,
    /// Worker threads; unset uses all cores. Outputs do not depend on it.
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub inputs: InputPaths,
    pub market: SyntheticMarketSpec,
    pub cohort: CohortSpec,
    pub forecast: RollingConfig,
    pub strategies: Vec<StrategyKind>,
    pub rebalance: Rebalance,
    /// Risk aversion in the mean-variance objective.
    pub gamma: f64,
    pub risk_window_months: u32,
    pub min_valid_days: usize,
    pub opportunity_window_months: u32,
    pub admission: AdmissionRule,
    pub scopes: Vec<Scope>,
    /// Index-tracking assets: excluded from investors' universes and used
    /// as spread benchmarks, in report order.
    pub benchmarks: Vec<String>,
    pub crisis: CrisisCalendar,
    pub bootstrap: BootstrapSpec,
    pub quantile_taus: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let market = SyntheticMarketSpec {
            n_assets: 30,
            n_etfs: 6,
            n_benchmarks: 2,
            n_days: 5479,
            start: NaiveDate::from_ymd_opt(1992, 1, 1).expect("date"),
            factor_vol: 0.008,
            idio_vol: 0.01,
            coupling: BTreeMap::from([("dfy".to_string(), 0.03)]),
            shocks: vec![PredictorShock {
                predictor: "dfy".into(),
                start: Month::new(2007, 12).expect("valid"),
                end: Month::new(2009, 6).expect("valid"),
                shift: -4.0,
            }],
            ..Default::default()
        };
        RunConfig {
            seed: 20_240_601,
            threads: None,
            out: PathBuf::from("out"),
            inputs: InputPaths::default(),
            market,
            cohort: CohortSpec::default(),
            forecast: RollingConfig::default(),
            strategies: StrategyKind::ALL.to_vec(),
            rebalance: Rebalance::Quarterly,
            gamma: 1.0,
            risk_window_months: crate::risk::WINDOW_MONTHS,
            min_valid_days: crate::risk::MIN_VALID_DAYS,
            opportunity_window_months: 24,
            admission: AdmissionRule::default(),
            scopes: vec![Scope::All, Scope::Equities],
            benchmarks: vec!["BM0".into(), "BM1".into()],
            crisis: CrisisCalendar::default(),
            bootstrap: BootstrapSpec::default(),
            quantile_taus: vec![0.05, 0.1, 0.2, 0.5, 0.8, 0.9, 0.95],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::config("strategies", "at least one strategy is required"));
        }
        if self.scopes.is_empty() {
            return Err(Error::config("scopes", "at least one scope is required"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if self.risk_window_months == 0 || self.opportunity_window_months == 0 {
            return Err(Error::config("risk_window_months", "windows must span at least one month"));
        }
        if self.crisis.end < self.crisis.start {
            return Err(Error::config("crisis", "end precedes start"));
        }
        if self.quantile_taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::config("quantile_taus", "levels must lie in (0, 1)"));
        }
        self.market.validate()?;
        self.cohort.validate()?;
        self.forecast.validate()?;
        self.bootstrap.validate()?;
        Ok(())
    }

    /// Copy with component seeds derived from the master seed.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.market.seed = seed::derive(self.seed, &[seed::key("market")]);
        c.cohort.seed = seed::derive(self.seed, &[seed::key("cohort")]);
        c.forecast.seed = seed::derive(self.seed, &[seed::key("forecast")]);
        c.bootstrap.seed = seed::derive(self.seed, &[seed::key("bootstrap")]);
        c
    }

    pub fn strategy_specs(&self) -> Vec<StrategySpec> {
        self.strategies.iter().map(|k| StrategySpec::new(*k, self.rebalance)).collect()
    }

    /// SHA-256 of the canonical JSON, leaving out the thread count and
    /// output directory, which do not change results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.out = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }

    pub fn forecast_dir(&self) -> PathBuf {
        self.out.join("forecast")
    }

    pub fn backtest_dir(&self, scope: Scope) -> PathBuf {
        self.out.join("backtest").join(scope.label())
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }

    pub fn manifest_dir(&self) -> PathBuf {
        self.out.join("manifests")
    }

    fn input(&self, set: &Option<PathBuf>, default: PathBuf) -> PathBuf {
        set.clone().unwrap_or(default)
    }

    pub fn universe_path(&self) -> PathBuf {
        self.input(&self.inputs.universe, self.data_dir().join("universe.csv"))
    }

    pub fn daily_returns_path(&self) -> PathBuf {
        self.input(&self.inputs.daily_returns, self.data_dir().join("daily_returns.csv"))
    }

    pub fn predictors_path(&self) -> PathBuf {
        self.input(&self.inputs.predictors, self.data_dir().join("predictors.csv"))
    }

    pub fn trades_path(&self) -> PathBuf {
        self.input(&self.inputs.trades, self.data_dir().join("trades.csv"))
    }

    pub fn profiles_path(&self) -> PathBuf {
        self.input(&self.inputs.profiles, self.data_dir().join("profiles.csv"))
    }

    pub fn forecasts_path(&self) -> PathBuf {
        self.input(&self.inputs.forecasts, self.forecast_dir().join("forecasts.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 5, "cohort": {"n_investors": 10}}"#).unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.cohort.n_investors, 10);
        assert_eq!(c.gamma, 1.0);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 5}"#).is_err());
    }

    #[test]
    fn hash_ignores_threads_and_out() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.threads = Some(4);
        b.out = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn zero_investors_named() {
        let mut c = RunConfig::default();
        c.cohort.n_investors = 0;
        assert!(c.validate().unwrap_err().to_string().contains("n_investors"));
    }
}
