//! Synthetic investor cohorts traded against a synthetic market.
//!
//! Each investor draws a small personal universe, enters at a random month
//! with two initial purchases and then trades a Poisson number of times per
//! month. A sell day liquidates each held position independently with a
//! logistic probability that rises for winners and falls for losers as the
//! investor's disposition knob grows. Trade prices follow the market's
//! total-return index from a seeded starting price, so the reconstructed
//! portfolio returns match the market exactly.

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveTime};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::market::{initial_price, DailyReturnPanel};
use crate::portfolio::{Direction, Gender, InvestorProfile, Level, TradeRecord};
use crate::{seed, Error, Month, Result};

/// Share of high-level investors per two-level stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrataMix {
    pub education_high: f64,
    pub income_high: f64,
    pub risk_aversion_high: f64,
}

impl Default for StrataMix {
    fn default() -> Self {
        StrataMix {
            education_high: 0.5,
            income_high: 0.5,
            risk_aversion_high: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_investors: usize,
    /// Investors enter uniformly over `[start, start + entry_window_months)`.
    pub start: Month,
    pub entry_window_months: u32,
    /// Last month with trades.
    pub end: Month,
    /// Mean trades per month across investors.
    pub trades_per_month: f64,
    /// Shape of the gamma-distributed per-investor activity multiplier
    /// (mean 1). Smaller means more dispersed trading frequencies.
    pub activity_shape: f64,
    /// Mean size of the personal universe; at least 2.
    pub universe_size_mean: f64,
    /// Probability that a trade event with open positions is a sell decision.
    pub sell_probability: f64,
    /// Disposition-effect intensity in [0, 1].
    pub disposition_effect: f64,
    /// Per-investor knob is `effect × (1 − h + 2h·U)`, clipped to [0, 1].
    pub disposition_heterogeneity: f64,
    /// Currency spent per purchase.
    pub purchase_value: f64,
    pub strata: StrataMix,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_investors: 500,
            start: Month::new(2002, 1).expect("valid"),
            entry_window_months: 24,
            end: Month::new(2012, 12).expect("valid"),
            trades_per_month: 2.76,
            activity_shape: 4.0,
            universe_size_mean: 4.0,
            sell_probability: 0.45,
            disposition_effect: 0.5,
            disposition_heterogeneity: 0.0,
            purchase_value: 5000.0,
            strata: StrataMix::default(),
            seed: 7,
        }
    }
}

/// Sale probability intercept and slope on the signed gain indicator.
const SELL_LOGIT_BASE: f64 = -1.0;
const SELL_LOGIT_SLOPE: f64 = 5.0;

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_investors == 0 {
            return Err(Error::config("n_investors", "must be at least 1"));
        }
        if self.end < self.start {
            return Err(Error::config("end", "precedes start"));
        }
        if !(self.trades_per_month > 0.0 && self.trades_per_month.is_finite()) {
            return Err(Error::config("trades_per_month", "must be positive"));
        }
        if !(self.activity_shape > 0.0) {
            return Err(Error::config("activity_shape", "must be positive"));
        }
        if !(self.universe_size_mean >= 2.0) {
            return Err(Error::config("universe_size_mean", "must be at least 2"));
        }
        for (field, v) in [
            ("sell_probability", self.sell_probability),
            ("disposition_effect", self.disposition_effect),
            ("disposition_heterogeneity", self.disposition_heterogeneity),
            ("strata.education_high", self.strata.education_high),
            ("strata.income_high", self.strata.income_high),
            ("strata.risk_aversion_high", self.strata.risk_aversion_high),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, "must lie in [0, 1]"));
            }
        }
        if !(self.purchase_value > 0.0) {
            return Err(Error::config("purchase_value", "must be positive"));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn level(rng: &mut impl Rng, p_high: f64) -> Level {
    if rng.random_bool(p_high) {
        Level::High
    } else {
        Level::Low
    }
}

struct Market<'a> {
    dates: &'a [NaiveDate],
    /// Trade price per (asset, day).
    prices: Vec<Vec<f64>>,
    /// Day ranges per month, keyed by month.
    month_days: BTreeMap<Month, std::ops::Range<usize>>,
    tradable: Vec<usize>,
    ids: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Position {
    shares: f64,
    cost: f64,
}

fn timestamp(date: NaiveDate, seq: usize) -> chrono::NaiveDateTime {
    let secs = 9 * 3600 + 30 * 60 + 60 * seq as u32;
    date.and_time(NaiveTime::from_num_seconds_from_midnight_opt(secs.min(86_399), 0).expect("in day"))
}

fn generate_investor(spec: &CohortSpec, market: &Market<'_>, i: usize) -> (InvestorProfile, Vec<TradeRecord>) {
    let id = format!("INV{i:05}");
    let mut rng = seed::rng(spec.seed, &[1, i as u64]);
    let profile = InvestorProfile {
        investor_id: id.clone(),
        age: rng.random_range(20..=80),
        gender: if rng.random_bool(0.5) { Gender::Male } else { Gender::Female },
        education: level(&mut rng, spec.strata.education_high),
        income: level(&mut rng, spec.strata.income_high),
        risk_aversion: level(&mut rng, spec.strata.risk_aversion_high),
    };

    let n_tradable = market.tradable.len();
    let extra = spec.universe_size_mean - 2.0;
    let size = if extra > 0.0 {
        2 + Poisson::new(extra).expect("positive").sample(&mut rng) as usize
    } else {
        2
    }
    .min(n_tradable);
    let mut personal: Vec<usize> = sample(&mut rng, n_tradable, size).into_iter().map(|k| market.tradable[k]).collect();
    personal.sort_unstable();

    let activity: f64 = Gamma::new(spec.activity_shape, 1.0 / spec.activity_shape).expect("positive").sample(&mut rng);
    let rate = spec.trades_per_month * activity;
    let h = spec.disposition_heterogeneity;
    let knob = (spec.disposition_effect * (1.0 - h + 2.0 * h * rng.random::<f64>())).clamp(0.0, 1.0);
    let entry = spec.start.plus(rng.random_range(0..spec.entry_window_months.max(1)) as i64);

    let mut positions: BTreeMap<usize, Position> = BTreeMap::new();
    let mut trades = Vec::new();
    for month in Month::range(entry, spec.end) {
        let Some(days) = market.month_days.get(&month) else { continue };
        let mut k = if rate > 0.0 { Poisson::new(rate).expect("positive").sample(&mut rng) as usize } else { 0 };
        if month == entry {
            k = k.max(2);
        }
        // one event per planned day; a sell event may close several positions
        let mut planned: Vec<usize> = (0..k).map(|_| rng.random_range(days.clone())).collect();
        planned.sort_unstable();
        let mut done = 0;
        let mut seq = 0;
        let mut last_day = usize::MAX;
        let mut p = 0;
        while done < k && p < planned.len() {
            let day = planned[p];
            p += 1;
            if day != last_day {
                seq = 0;
                last_day = day;
            }
            let opening = month == entry && done < 2;
            let sell = !opening && !positions.is_empty() && rng.random_bool(spec.sell_probability);
            let sold: Vec<usize> = if sell {
                positions
                    .iter()
                    .filter(|(a, pos)| {
                        let px = market.prices[**a][day];
                        let signed = if px > pos.cost {
                            1.0
                        } else if px < pos.cost {
                            -1.0
                        } else {
                            0.0
                        };
                        rng.random_bool(sigmoid(SELL_LOGIT_BASE + SELL_LOGIT_SLOPE * knob * signed))
                    })
                    .map(|(a, _)| *a)
                    .collect()
            } else {
                Vec::new()
            };
            // a sell decision that picks nothing becomes a purchase
            if !sold.is_empty() {
                for a in sold {
                    let pos = positions.remove(&a).expect("held");
                    trades.push(TradeRecord {
                        investor_id: id.clone(),
                        timestamp: timestamp(market.dates[day], seq),
                        asset: market.ids[a].clone(),
                        direction: Direction::Sell,
                        quantity: pos.shares,
                        price: market.prices[a][day],
                    });
                    seq += 1;
                    done += 1;
                }
            } else {
                let a = if opening {
                    let held: Vec<usize> = personal.iter().copied().filter(|a| !positions.contains_key(a)).collect();
                    held[rng.random_range(0..held.len())]
                } else {
                    personal[rng.random_range(0..personal.len())]
                };
                let px = market.prices[a][day];
                let shares = (spec.purchase_value / px).round().max(1.0);
                let pos = positions.entry(a).or_insert(Position { shares: 0.0, cost: 0.0 });
                pos.cost = (pos.cost * pos.shares + px * shares) / (pos.shares + shares);
                pos.shares += shares;
                trades.push(TradeRecord {
                    investor_id: id.clone(),
                    timestamp: timestamp(market.dates[day], seq),
                    asset: market.ids[a].clone(),
                    direction: Direction::Buy,
                    quantity: shares,
                    price: px,
                });
                seq += 1;
                done += 1;
            }
        }
    }
    (profile, trades)
}

/// Trades and profiles for `spec.n_investors` investors who trade only the
/// `tradable` assets of `daily`. Identical inputs give identical output.
pub fn generate_cohort(
    spec: &CohortSpec,
    daily: &DailyReturnPanel,
    tradable: &[String],
) -> Result<(Vec<TradeRecord>, Vec<InvestorProfile>)> {
    spec.validate()?;
    let (Some(first), Some(last)) = (daily.first_month(), daily.last_month()) else {
        return Err(Error::Empty("market panel has no days".into()));
    };
    if spec.start < first || spec.end > last {
        return Err(Error::Validation(format!(
            "cohort horizon {}..{} is outside the market's {first}..{last}",
            spec.start, spec.end
        )));
    }
    let ids: Vec<String> = daily.assets().iter().map(|a| a.id.clone()).collect();
    let mut tradable_idx = Vec::new();
    for t in tradable {
        tradable_idx.push(daily.asset_index(t).ok_or_else(|| Error::UnknownAsset(t.clone()))?);
    }
    tradable_idx.sort_unstable();
    tradable_idx.dedup();
    if tradable_idx.len() < 2 {
        return Err(Error::Validation("cohort needs at least 2 tradable assets".into()));
    }
    let index = daily.growth_index();
    let prices = index
        .iter()
        .enumerate()
        .map(|(a, g)| {
            let p0 = initial_price(spec.seed, a);
            g.iter().map(|v| p0 * v).collect()
        })
        .collect();
    let mut month_days: BTreeMap<Month, std::ops::Range<usize>> = BTreeMap::new();
    for m in Month::range(spec.start, spec.end) {
        let r = daily.day_range(m, m);
        if !r.is_empty() {
            month_days.insert(m, r);
        }
    }
    let market = Market {
        dates: daily.dates(),
        prices,
        month_days,
        tradable: tradable_idx,
        ids,
    };
    let mut trades = Vec::new();
    let mut profiles = Vec::with_capacity(spec.n_investors);
    for i in 0..spec.n_investors {
        let (p, t) = generate_investor(spec, &market, i);
        profiles.push(p);
        trades.extend(t);
    }
    Ok((trades, profiles))
}
