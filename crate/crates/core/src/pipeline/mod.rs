//! The four pipeline stages and their file handoffs.
//!
//! ```text
//! generate  -> data/{universe,daily_returns,predictors,trades,profiles}.csv
//! train     -> forecast/{forecasts,win_fractions,forecast_mse,en_ranking,negative_forecasts}.csv
//! backtest  -> backtest/<scope>/{investor_returns,exclusions,tracks,spreads,median_paths,behavior}.csv
//! report    -> report/*.csv, report/summary.txt
//! ```
//!
//! Every stage writes `manifests/<stage>.json`. Everything else under the
//! output directory is a pure function of the configuration.

mod backtest;
mod config;
mod generate;
mod io;
mod manifest;
mod report;
mod train;

use std::fmt;
use std::str::FromStr;

pub use backtest::backtest;
pub use config::{InputPaths, RunConfig, Scope};
pub use generate::generate;
pub use io::{load_behavior, load_investor_returns, load_spreads, load_tracks, BehaviorRow, SeriesByInvestor};
pub use manifest::{module_versions, parameters, Manifest};
pub use report::report;
pub use train::train;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generate,
    Train,
    Backtest,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Generate, Stage::Train, Stage::Backtest, Stage::Report];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Train => "train",
            Stage::Backtest => "backtest",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.label() == s)
            .ok_or_else(|| Error::Validation(format!("unknown stage `{s}`")))
    }
}

/// Validate the config, run one stage on a pool of `config.threads`
/// workers and record its manifest.
pub fn run_stage(stage: Stage, config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    let cfg = config.resolved();
    let started = chrono::Utc::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    log::info!("{stage}: config {}", cfg.hash());
    pool.install(|| match stage {
        Stage::Generate => generate(&cfg),
        Stage::Train => train(&cfg),
        Stage::Backtest => backtest(&cfg),
        Stage::Report => report(&cfg),
    })?;
    let manifest = Manifest {
        stage: stage.label().to_string(),
        config_hash: config.hash(),
        seed: config.seed,
        started,
        finished: chrono::Utc::now(),
        module_versions: module_versions(),
        parameters: parameters(),
    };
    manifest.write(&cfg.manifest_dir())?;
    Ok(manifest)
}

pub(crate) fn ensure_dir(path: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
