use super::{ensure_dir, RunConfig};
use crate::cohort::generate_cohort;
use crate::market::{generate_synthetic_market, write_daily_returns, write_predictors, write_universe};
use crate::portfolio::{write_profiles, write_trades};
use crate::{Error, Result};

/// Synthetic market and cohort under `<out>/data`.
pub fn generate(cfg: &RunConfig) -> Result<()> {
    let dir = cfg.data_dir();
    ensure_dir(&dir)?;
    let (daily, predictors) = generate_synthetic_market(&cfg.market)?;
    for b in &cfg.benchmarks {
        if daily.asset_index(b).is_none() {
            return Err(Error::config("benchmarks", format!("`{b}` is not in the generated market")));
        }
    }
    let tradable: Vec<String> = daily
        .assets()
        .iter()
        .map(|a| a.id.clone())
        .filter(|id| !cfg.benchmarks.contains(id))
        .collect();
    let (trades, profiles) = generate_cohort(&cfg.cohort, &daily, &tradable)?;
    log::info!("generated {} assets, {} trades for {} investors", daily.n_assets(), trades.len(), profiles.len());
    write_universe(daily.assets(), &dir.join("universe.csv"))?;
    write_daily_returns(&daily, &dir.join("daily_returns.csv"))?;
    write_predictors(&predictors, &dir.join("predictors.csv"))?;
    write_trades(&trades, &dir.join("trades.csv"))?;
    write_profiles(&profiles, &dir.join("profiles.csv"))
}
