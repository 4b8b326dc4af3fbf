use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::io::{load_behavior, load_investor_returns, load_spreads, load_tracks, write_rows, SeriesByInvestor};
use super::{ensure_dir, RunConfig};
use crate::analytics::{
    bootstrap_median_ci, crisis_split_stats, cross_section_summary, quantile_regression, stratified_summary,
    write_quantreg, CrossSectionSummary, QuantileRegSpec, Stratum,
};
use crate::engine::{benchmark_spread, spread_between, StrategyKind, StrategySpec, PATH_CAUTION};
use crate::market::{aggregate_to_monthly, load_daily_returns, load_universe};
use crate::numfmt::fmt12;
use crate::portfolio::{load_profiles, Level};
use crate::{Error, Month, Result};

fn summary_cells(s: &CrossSectionSummary) -> [String; 4] {
    [s.n.to_string(), fmt12(s.median), fmt12(s.q1), fmt12(s.q3)]
}

/// The strategy the per-investor tables focus on: ML means with rolling
/// covariance when configured, else the first configured strategy.
fn focus_strategy(cfg: &RunConfig, preferred: StrategyKind) -> StrategySpec {
    let kind = if cfg.strategies.contains(&preferred) {
        preferred
    } else if cfg.strategies.contains(&StrategyKind::MvMlRollVar) {
        StrategyKind::MvMlRollVar
    } else {
        cfg.strategies[0]
    };
    StrategySpec::new(kind, cfg.rebalance)
}

fn annualized(spreads: &BTreeMap<Month, f64>) -> f64 {
    1200.0 * spreads.values().sum::<f64>() / spreads.len() as f64
}

/// Cross-sectional tables, crisis splits, benchmark spreads and behavioral
/// regressions under `<out>/report`.
pub fn report(cfg: &RunConfig) -> Result<()> {
    let dir = cfg.report_dir();
    ensure_dir(&dir)?;
    let primary_scope = cfg.scopes[0];
    let focus = focus_strategy(cfg, StrategyKind::MvMlRollVar);
    let benchmark_leg = focus_strategy(cfg, StrategyKind::MvMlNonlinearVar);
    let mut text = String::new();

    // spreads per scope and strategy
    let mut rows = Vec::new();
    for scope in &cfg.scopes {
        let spreads = load_spreads(&cfg.backtest_dir(*scope).join("spreads.csv"))?;
        for spec in cfg.strategy_specs() {
            let label = spec.to_string();
            let values: Vec<f64> = spreads.get(&label).map(|m| m.values().copied().collect()).unwrap_or_default();
            let Ok(s) = cross_section_summary(&values) else {
                log::warn!("{}: no spreads for {label}", scope.label());
                continue;
            };
            let _ = writeln!(
                text,
                "{:<9} {:<30} n={:<5} median {:>8.2}  Q1 {:>8.2}  Q3 {:>8.2}  (% per year)",
                scope.label(),
                label,
                s.n,
                s.median,
                s.q1,
                s.q3
            );
            let mut r = vec![scope.label().to_string(), label];
            r.extend(summary_cells(&s));
            rows.push(r);
        }
    }
    write_rows(&dir.join("spread_summary.csv"), &["scope", "strategy", "n", "median", "q1", "q3"], rows)?;

    let bt = cfg.backtest_dir(primary_scope);
    let spreads = load_spreads(&bt.join("spreads.csv"))?;
    let realized = load_investor_returns(&bt.join("investor_returns.csv"))?;
    let tracks = load_tracks(&bt.join("tracks.csv"))?;
    let empty = SeriesByInvestor::new();
    let focus_tracks = tracks.get(&focus.to_string()).unwrap_or(&empty);
    let focus_spreads = spreads.get(&focus.to_string()).cloned().unwrap_or_default();

    // strata
    let profiles = load_profiles(&cfg.profiles_path())?;
    let mut rows = Vec::new();
    for stratum in Stratum::ALL {
        let s = match stratified_summary(&focus_spreads, &profiles, stratum, Some(&cfg.bootstrap)) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("{stratum}: {e}");
                continue;
            }
        };
        for (level, lv, summ) in [("low", Level::Low, &s.low), ("high", Level::High, &s.high)] {
            let values: Vec<f64> = focus_spreads
                .iter()
                .filter(|(id, _)| {
                    profiles
                        .iter()
                        .find(|p| &p.investor_id == *id)
                        .is_some_and(|p| stratum.level(p) == lv)
                })
                .map(|(_, v)| *v)
                .collect();
            let ci = if values.len() >= 10 { Some(bootstrap_median_ci(&values, &cfg.bootstrap)?) } else { None };
            let mut r = vec![stratum.to_string(), level.to_string()];
            r.extend(summary_cells(summ));
            r.push(ci.as_ref().map(|c| fmt12(c.lower)).unwrap_or_default());
            r.push(ci.as_ref().map(|c| fmt12(c.upper)).unwrap_or_default());
            rows.push(r);
        }
        rows.push(vec![
            stratum.to_string(),
            "high-low".to_string(),
            (s.low.n + s.high.n).to_string(),
            fmt12(s.median_difference),
            String::new(),
            String::new(),
            s.interval.as_ref().map(|c| fmt12(c.lower)).unwrap_or_default(),
            s.interval.as_ref().map(|c| fmt12(c.upper)).unwrap_or_default(),
        ]);
        let _ = writeln!(text, "{stratum}: high minus low median spread {:.2}", s.median_difference);
    }
    write_rows(
        &dir.join("strata_summary.csv"),
        &["stratum", "level", "n", "median", "q1", "q3", "ci_lower", "ci_upper"],
        rows,
    )?;

    // crisis regimes, realized and robo returns
    let mut rows = Vec::new();
    for (series, data) in [("Realized".to_string(), &realized), (focus.to_string(), focus_tracks)] {
        for r in crisis_split_stats(data, &cfg.crisis)? {
            if let Some(s) = r.summary {
                let mut row = vec![r.regime.to_string(), series.clone()];
                row.extend(summary_cells(&s));
                rows.push(row);
            }
        }
    }
    write_rows(&dir.join("crisis_returns.csv"), &["regime", "series", "n", "median", "q1", "q3"], rows)?;

    // benchmark spreads
    let universe = load_universe(&cfg.universe_path())?;
    let daily = load_daily_returns(&cfg.daily_returns_path(), &universe)?;
    let monthly = aggregate_to_monthly(&daily)?;
    let leg_tracks = tracks.get(&benchmark_leg.to_string()).unwrap_or(&empty);
    let mut rows = Vec::new();
    let mut regression_benchmark: BTreeMap<String, f64> = BTreeMap::new();
    for (bi, b) in cfg.benchmarks.iter().enumerate() {
        let j = monthly.asset_index(b).ok_or_else(|| Error::UnknownAsset(b.clone()))?;
        let bench = monthly.series_map(j);
        for (leg, data) in [("realized", &realized), ("alter_ego", leg_tracks)] {
            let mut monthly_spreads = SeriesByInvestor::new();
            for (id, r) in data {
                match benchmark_spread(id, b, r, &bench) {
                    Ok(s) => {
                        monthly_spreads.insert(id.clone(), s.spreads);
                    }
                    Err(e) => log::debug!("{id} vs {b}: {e}"),
                }
            }
            let full: Vec<f64> = monthly_spreads.values().map(annualized).collect();
            let mut periods = Vec::new();
            if let Ok(s) = cross_section_summary(&full) {
                periods.push(("full".to_string(), s));
            }
            for r in crisis_split_stats(&monthly_spreads, &cfg.crisis)? {
                if let Some(s) = r.summary {
                    periods.push((r.regime.to_string(), s));
                }
            }
            for (period, s) in periods {
                let mut row = vec![b.clone(), period, leg.to_string()];
                row.extend(summary_cells(&s));
                rows.push(row);
            }
        }
        if bi == 0 {
            for (id, r) in focus_tracks {
                if let Ok(s) = spread_between(id, b, r, &bench) {
                    regression_benchmark.insert(id.clone(), s.annualized_pct);
                }
            }
        }
    }
    write_rows(
        &dir.join("benchmark_spreads.csv"),
        &["benchmark", "period", "leg", "n", "median", "q1", "q3"],
        rows,
    )?;

    // behavioral regressions
    let behavior = load_behavior(&bt.join("behavior.csv"))?;
    let spec = QuantileRegSpec {
        taus: cfg.quantile_taus.clone(),
        bootstrap: cfg.bootstrap,
    };
    for (name, y) in [("spread", &focus_spreads), ("benchmark", &regression_benchmark)] {
        for with_freq in [false, true] {
            let mut ys = Vec::new();
            let mut xs = Vec::new();
            for b in &behavior {
                let (Some(de), Some(v)) = (b.disposition_effect, y.get(&b.investor_id)) else { continue };
                ys.push(*v);
                xs.push(de);
                if with_freq {
                    xs.extend((2..=4).map(|q| if b.frequency_quartile == q { 1.0 } else { 0.0 }));
                }
            }
            let mut names = vec!["de".to_string()];
            if with_freq {
                names.extend(["q2", "q3", "q4"].map(String::from));
            }
            let x = DMatrix::from_row_slice(ys.len(), names.len(), &xs);
            let file = format!("regression_{name}_{}.csv", if with_freq { "de_freq" } else { "de" });
            match quantile_regression(&ys, &x, &names, &spec) {
                Ok(rows) => {
                    if let Some(r) = rows.iter().find(|r| r.tau == 0.5 && r.covariate == "de") {
                        let _ = writeln!(text, "{file}: median DE coefficient {:.3} (p = {:.3})", r.coefficient, r.p_value);
                    }
                    write_quantreg(&rows, &dir.join(file))?;
                }
                Err(e) => {
                    log::warn!("{file}: {e}");
                    let _ = writeln!(text, "{file}: not estimated ({e})");
                }
            }
        }
    }

    let _ = writeln!(text, "median paths: {PATH_CAUTION}");
    let path = dir.join("summary.txt");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
