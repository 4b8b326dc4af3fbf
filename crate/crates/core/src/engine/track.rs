use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use super::riskcache::RiskCache;
use super::strategy::{StrategyKind, StrategySpec};
use crate::allocator::{drift_weights, equal_weights, solve_long_only_mv, AllocationProblem, Weights};
use crate::forecast::ForecastPanel;
use crate::fsio::{create, csv_err};
use crate::market::MonthlyReturnPanel;
use crate::numfmt::fmt12;
use crate::portfolio::{opportunity_set, HoldingsLedger, TradeRecord};
use crate::risk::{restrict_to_set, MeanEstimate};
use crate::{Error, Month, Result};

/// Shared read-only market inputs.
#[derive(Debug, Clone, Copy)]
pub struct MarketContext<'a> {
    pub monthly: &'a MonthlyReturnPanel,
    pub risk: &'a RiskCache,
    pub forecasts: Option<&'a ForecastPanel>,
    pub gamma: f64,
}

/// What the engine needs to know about one admitted investor.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestorContext {
    pub investor_id: String,
    /// The investor's realized monthly returns.
    pub returns: BTreeMap<Month, f64>,
    /// Opportunity set at each month the robot may form a portfolio.
    pub opportunity: BTreeMap<Month, BTreeSet<String>>,
}

impl InvestorContext {
    /// Opportunity sets at every month from the first return month up to
    /// the month before the last one.
    pub fn from_ledger(
        ledger: &HoldingsLedger,
        trades: &[TradeRecord],
        returns: BTreeMap<Month, f64>,
        window_months: u32,
    ) -> Self {
        let mut opportunity = BTreeMap::new();
        if let (Some(first), Some(last)) = (returns.keys().next(), returns.keys().next_back()) {
            for t in Month::range(*first, last.prev()) {
                opportunity.insert(t, opportunity_set(ledger, trades, t, window_months).assets);
            }
        }
        InvestorContext {
            investor_id: ledger.investor_id.clone(),
            returns,
            opportunity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub robo_return: f64,
    /// Cash share held over the month.
    pub cash_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlterEgoTrack {
    pub investor_id: String,
    pub strategy: StrategySpec,
    pub points: BTreeMap<Month, TrackPoint>,
    /// Weights chosen at each rebalance (formation) month.
    pub snapshots: Vec<(Month, Weights)>,
}

impl AlterEgoTrack {
    pub fn returns(&self) -> BTreeMap<Month, f64> {
        self.points.iter().map(|(m, p)| (*m, p.robo_return)).collect()
    }
}

fn form_weights(ctx: &MarketContext<'_>, kind: StrategyKind, t: Month, set: &BTreeSet<String>) -> Result<Weights> {
    let tradable: Vec<String> = set
        .iter()
        .filter(|a| {
            let known = ctx.monthly.asset_index(a).is_some();
            if !known {
                log::debug!("{a} is not in the return panel; dropped at {t}");
            }
            known
        })
        .cloned()
        .collect();
    if kind == StrategyKind::Ew {
        return if tradable.is_empty() {
            Ok(Weights::all_cash())
        } else {
            equal_weights(&tradable)
        };
    }
    let Some(risk) = ctx.risk.get(t) else {
        log::debug!("no risk estimates at {t}; robot holds cash");
        return Ok(Weights::all_cash());
    };
    let cov_full = match kind {
        StrategyKind::MvMlNonlinearVar => risk
            .nonlinear
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("nonlinear covariance was not estimated for {t}")))?,
        _ => &risk.linear,
    };
    let mut chosen = Vec::new();
    let mut mu = Vec::new();
    for a in &tradable {
        if !cov_full.assets.contains(a) {
            log::debug!("{a} lacks history for risk estimates at {t}; dropped");
            continue;
        }
        let value = if kind.uses_forecasts() {
            let forecasts = ctx
                .forecasts
                .ok_or_else(|| Error::Validation("forecast strategies need a forecast panel".into()))?;
            match forecasts.forecast(a, t) {
                Some(f) => f,
                None => {
                    log::debug!("no forecast for {a} at {t}; dropped");
                    continue;
                }
            }
        } else {
            let i = risk.mean.assets.iter().position(|x| x == a).expect("mean and covariance share assets");
            risk.mean.values[i]
        };
        chosen.push(a.clone());
        mu.push(value);
    }
    if chosen.is_empty() {
        return Ok(Weights::all_cash());
    }
    let full_mean = MeanEstimate {
        assets: cov_full.assets.clone(),
        values: DVector::zeros(cov_full.n()),
    };
    let (_, cov) = restrict_to_set(&full_mean, cov_full, &chosen)?;
    let mean = MeanEstimate {
        assets: chosen,
        values: DVector::from_vec(mu),
    };
    let problem = AllocationProblem::new(&mean, &cov, ctx.gamma)?;
    solve_long_only_mv(&problem)
}

/// Simulate one strategy for one investor over the months following their
/// first return month, through their last return month.
pub fn run_alter_ego(ctx: &MarketContext<'_>, investor: &InvestorContext, strategy: StrategySpec) -> Result<AlterEgoTrack> {
    let mut track = AlterEgoTrack {
        investor_id: investor.investor_id.clone(),
        strategy,
        points: BTreeMap::new(),
        snapshots: Vec::new(),
    };
    let (Some(&first), Some(&last)) = (investor.returns.keys().next(), investor.returns.keys().next_back()) else {
        return Ok(track);
    };
    let empty = BTreeSet::new();
    let mut weights: Option<Weights> = None;
    for t in Month::range(first, last.prev()) {
        let hold = t.next();
        let Some(mi) = ctx.monthly.month_index(hold) else { break };
        if weights.is_none() || strategy.rebalance.is_date(t) {
            let set = investor.opportunity.get(&t).unwrap_or(&empty);
            let w = form_weights(ctx, strategy.kind, t, set)?;
            track.snapshots.push((t, w.clone()));
            weights = Some(w);
        }
        let w = weights.as_ref().expect("formed above");
        let r: Vec<f64> = w
            .assets
            .iter()
            .map(|a| {
                let j = ctx.monthly.asset_index(a).expect("tradable assets are in the panel");
                ctx.monthly.get(mi, j).unwrap_or_else(|| {
                    log::debug!("missing return for {a} in {hold}; taken as 0");
                    0.0
                })
            })
            .collect();
        let robo_return: f64 = w.w.iter().zip(&r).map(|(wi, ri)| wi * ri).sum();
        track.points.insert(
            hold,
            TrackPoint {
                robo_return,
                cash_weight: w.cash(),
            },
        );
        weights = Some(drift_weights(w, &r)?);
    }
    Ok(track)
}

/// Every (investor, strategy) pair, in investor-major order.
pub fn run_all(
    ctx: &MarketContext<'_>,
    investors: &[InvestorContext],
    strategies: &[StrategySpec],
) -> Result<Vec<AlterEgoTrack>> {
    let jobs: Vec<(&InvestorContext, StrategySpec)> =
        investors.iter().flat_map(|i| strategies.iter().map(move |s| (i, *s))).collect();
    jobs.par_iter().map(|(i, s)| run_alter_ego(ctx, i, *s)).collect()
}

pub fn write_tracks(tracks: &[AlterEgoTrack], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["investor_id", "strategy", "month", "robo_return", "cash_weight"])
        .map_err(|e| csv_err(path, e))?;
    for t in tracks {
        let strategy = t.strategy.to_string();
        for (m, p) in &t.points {
            w.write_record([
                t.investor_id.as_str(),
                strategy.as_str(),
                m.to_string().as_str(),
                fmt12(p.robo_return).as_str(),
                fmt12(p.cash_weight).as_str(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
