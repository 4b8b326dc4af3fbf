use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::config::Scope;
use super::io::{write_behavior, write_series, SeriesByInvestor};
use super::{ensure_dir, RunConfig};
use crate::engine::{
    compound_median_paths, compute_spread, run_all, write_paths, write_spreads, write_tracks, InvestorContext,
    MarketContext, RiskCache, StrategyKind,
};
use crate::forecast::{load_forecasts, ForecastPanel};
use crate::market::{aggregate_to_monthly, load_daily_returns, load_universe, AssetClass};
use crate::portfolio::{
    apply_admission_filters, assign_frequency_quartiles, behavioral_metrics, build_holdings, group_by_investor,
    investor_returns, load_trades, opportunity_set, write_exclusions, BehavioralMetrics, HoldingsLedger,
    InvestorHistory, PriceBook, TradeRecord,
};
use crate::{Error, Month, Result};

struct Reconstructed {
    ledger: HoldingsLedger,
    trades: Vec<TradeRecord>,
    history: InvestorHistory,
}

fn reconstruct(
    id: &str,
    trades: Vec<TradeRecord>,
    book: &PriceBook,
    through: Month,
    window: u32,
) -> Result<Reconstructed> {
    let ledger = build_holdings(&trades)?;
    let returns = investor_returns(&ledger, &trades, book, through)?;
    let opportunity_sizes = returns
        .keys()
        .map(|m| (*m, opportunity_set(&ledger, &trades, *m, window).len()))
        .collect();
    Ok(Reconstructed {
        history: InvestorHistory {
            investor_id: id.to_string(),
            returns,
            opportunity_sizes,
        },
        ledger,
        trades,
    })
}

/// Formation months at which some investor's robot needs risk estimates.
fn risk_months(investors: &[InvestorContext], cfg: &RunConfig) -> Vec<Month> {
    let mut months = BTreeSet::new();
    for inv in investors {
        let mut first = true;
        for t in inv.opportunity.keys() {
            if first || cfg.rebalance.is_date(*t) {
                months.insert(*t);
            }
            first = false;
        }
    }
    months.into_iter().collect()
}

/// Investor reconstruction, admission, robo tracks and spreads for every
/// configured scope under `<out>/backtest/<scope>`.
pub fn backtest(cfg: &RunConfig) -> Result<()> {
    let universe = load_universe(&cfg.universe_path())?;
    let daily = load_daily_returns(&cfg.daily_returns_path(), &universe)?;
    let monthly = aggregate_to_monthly(&daily)?;
    let book = PriceBook::from_panel(&daily);
    let through = daily.last_month().ok_or_else(|| Error::Empty("daily returns have no days".into()))?;
    let all_trades = load_trades(&cfg.trades_path())?;
    for b in &cfg.benchmarks {
        if universe.iter().all(|a| &a.id != b) {
            return Err(Error::config("benchmarks", format!("`{b}` is not in the universe")));
        }
    }
    let class: BTreeMap<&str, AssetClass> = universe.iter().map(|a| (a.id.as_str(), a.class)).collect();
    let specs = cfg.strategy_specs();
    let forecasts: Option<ForecastPanel> = if cfg.strategies.iter().any(|k| k.uses_forecasts()) {
        Some(load_forecasts(&cfg.forecasts_path())?)
    } else {
        None
    };
    let needs_risk = cfg.strategies.iter().any(|k| *k != StrategyKind::Ew);
    let needs_nonlinear = cfg.strategies.contains(&StrategyKind::MvMlNonlinearVar);

    for scope in cfg.scopes.iter().copied() {
        let trades: Vec<TradeRecord> = all_trades
            .iter()
            .filter(|t| scope == Scope::All || class.get(t.asset.as_str()) == Some(&AssetClass::Stock))
            .cloned()
            .collect();
        let grouped: Vec<(String, Vec<TradeRecord>)> = group_by_investor(&trades).into_iter().collect();
        let investors: Vec<Reconstructed> = grouped
            .into_par_iter()
            .map(|(id, t)| reconstruct(&id, t, &book, through, cfg.opportunity_window_months))
            .collect::<Result<_>>()?;
        let histories: Vec<InvestorHistory> = investors.iter().map(|r| r.history.clone()).collect();
        let admission = apply_admission_filters(&histories, &cfg.admission);
        let admitted: BTreeMap<&str, &InvestorHistory> =
            admission.admitted.iter().map(|h| (h.investor_id.as_str(), h)).collect();
        log::info!(
            "{}: {} investors admitted, {} excluded",
            scope.label(),
            admission.admitted.len(),
            admission.excluded.len()
        );
        if admitted.is_empty() {
            return Err(Error::Validation(format!("no investor passes admission in scope `{}`", scope.label())));
        }

        let contexts: Vec<InvestorContext> = investors
            .par_iter()
            .filter_map(|r| {
                admitted.get(r.history.investor_id.as_str()).map(|h| {
                    InvestorContext::from_ledger(&r.ledger, &r.trades, h.returns.clone(), cfg.opportunity_window_months)
                })
            })
            .collect();
        let risk = if needs_risk {
            RiskCache::build(&daily, &risk_months(&contexts, cfg), cfg.risk_window_months, cfg.min_valid_days, needs_nonlinear)
        } else {
            RiskCache::default()
        };
        let ctx = MarketContext {
            monthly: &monthly,
            risk: &risk,
            forecasts: forecasts.as_ref(),
            gamma: cfg.gamma,
        };
        let tracks = run_all(&ctx, &contexts, &specs)?;

        let dir = cfg.backtest_dir(scope);
        ensure_dir(&dir)?;
        write_exclusions(&admission.excluded, &dir.join("exclusions.csv"))?;
        let realized: SeriesByInvestor = contexts.iter().map(|c| (c.investor_id.clone(), c.returns.clone())).collect();
        write_series(&realized, &dir.join("investor_returns.csv"))?;
        write_tracks(&tracks, &dir.join("tracks.csv"))?;

        let mut spreads = Vec::new();
        for t in &tracks {
            match compute_spread(t, &realized[&t.investor_id]) {
                Ok(s) => spreads.push(s),
                Err(e) => log::debug!("{}/{}: no spread: {e}", t.investor_id, t.strategy),
            }
        }
        write_spreads(&spreads, &dir.join("spreads.csv"))?;

        let robo: Vec<(String, Vec<BTreeMap<Month, f64>>)> = specs
            .iter()
            .map(|spec| {
                let members = tracks.iter().filter(|t| t.strategy == *spec).map(|t| t.returns()).collect();
                (spec.kind.path_label().to_string(), members)
            })
            .collect();
        let mut series = vec![("Realized".to_string(), realized.values().collect::<Vec<_>>())];
        series.extend(robo.iter().map(|(label, members)| (label.clone(), members.iter().collect())));
        write_paths(&compound_median_paths(&series), &dir.join("median_paths.csv"))?;

        let mut behavior: Vec<BehavioralMetrics> = investors
            .par_iter()
            .filter(|r| admitted.contains_key(r.history.investor_id.as_str()))
            .map(|r| behavioral_metrics(&r.trades, &r.ledger, &book))
            .collect::<Result<_>>()?;
        assign_frequency_quartiles(&mut behavior);
        write_behavior(&behavior, &dir.join("behavior.csv"))?;
    }
    Ok(())
}
