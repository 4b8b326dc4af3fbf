use std::path::Path;

use super::io::write_rows;
use super::{ensure_dir, RunConfig};
use crate::analytics::median;
use crate::forecast::{en_l2_ranking, rolling_retrain, write_forecasts, ForecastPanel, ModelKind, WindowResult};
use crate::market::{aggregate_to_monthly, load_daily_returns, load_predictors, load_universe};
use crate::numfmt::fmt12;
use crate::Result;

fn window_label(w: &WindowResult) -> String {
    format!("{}/{}", w.start, w.end)
}

pub(crate) fn write_win_fractions(windows: &[WindowResult], path: &Path) -> Result<()> {
    let rows = windows.iter().flat_map(|w| {
        let f = w.win_fractions();
        ModelKind::ALL.map(|k| vec![window_label(w), k.label().to_string(), fmt12(f[k.index()])])
    });
    write_rows(path, &["window", "kind", "win_fraction"], rows)
}

/// Mean and median test MSE and MAE per kind, pooled over windows and assets.
fn write_errors(windows: &[WindowResult], path: &Path) -> Result<()> {
    let pooled = |k: ModelKind, pick: fn(&crate::forecast::KindErrors) -> &[f64; 5]| -> Vec<f64> {
        windows.iter().flat_map(|w| w.fits.iter().map(move |f| pick(&f.errors)[k.index()])).collect()
    };
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let rows = ModelKind::ALL.map(|k| {
        let mse = pooled(k, |e| &e.mse);
        let mae = pooled(k, |e| &e.mae);
        vec![
            k.label().to_string(),
            fmt12(mean(&mse)),
            fmt12(median(&mse).unwrap_or(f64::NAN)),
            fmt12(mean(&mae)),
            fmt12(median(&mae).unwrap_or(f64::NAN)),
            mse.len().to_string(),
        ]
    });
    write_rows(path, &["kind", "mean_mse", "median_mse", "mean_mae", "median_mae", "n"], rows)
}

fn write_ranking(windows: &[WindowResult], path: &Path) -> Result<()> {
    let rows = windows.iter().flat_map(|w| {
        en_l2_ranking(&w.fits)
            .into_iter()
            .enumerate()
            .map(|(r, (name, share))| vec![window_label(w), (r + 1).to_string(), name.to_string(), fmt12(share)])
            .collect::<Vec<_>>()
    });
    write_rows(path, &["window", "rank", "predictor", "share"], rows)
}

fn write_negative_fraction(panel: &ForecastPanel, path: &Path) -> Result<()> {
    let rows = panel
        .months()
        .into_iter()
        .filter_map(|m| panel.negative_fraction(m).map(|f| vec![m.to_string(), fmt12(f)]));
    write_rows(path, &["month", "negative_fraction"], rows)
}

/// Rolling per-asset model training and selection under `<out>/forecast`.
pub fn train(cfg: &RunConfig) -> Result<()> {
    let universe = load_universe(&cfg.universe_path())?;
    let daily = load_daily_returns(&cfg.daily_returns_path(), &universe)?;
    let predictors = load_predictors(&cfg.predictors_path())?;
    let tradable: Vec<String> =
        universe.iter().map(|a| a.id.clone()).filter(|id| !cfg.benchmarks.contains(id)).collect();
    let monthly = aggregate_to_monthly(&daily)?.select(&tradable)?;
    let (windows, panel) = rolling_retrain(&monthly, &predictors, &cfg.forecast)?;
    log::info!("trained {} windows, {} forecasts", windows.len(), panel.records().len());

    let dir = cfg.forecast_dir();
    ensure_dir(&dir)?;
    write_forecasts(&panel, &dir.join("forecasts.csv"))?;
    write_win_fractions(&windows, &dir.join("win_fractions.csv"))?;
    write_errors(&windows, &dir.join("forecast_mse.csv"))?;
    write_ranking(&windows, &dir.join("en_ranking.csv"))?;
    write_negative_fraction(&panel, &dir.join("negative_forecasts.csv"))?;
    let skipped = windows
        .iter()
        .flat_map(|w| w.skipped.iter().map(move |(a, why)| vec![window_label(w), a.clone(), why.clone()]));
    write_rows(&dir.join("skipped.csv"), &["window", "asset_id", "reason"], skipped)
}
