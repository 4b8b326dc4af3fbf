use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::market::DailyReturnPanel;
use crate::risk::{
    linear_shrinkage, nonlinear_shrinkage, rolling_mean, sample_covariance, CovarianceEstimate, MeanEstimate,
    ReturnWindow,
};
use crate::{Month, Result};

/// Full-universe estimates for one formation month. Investors' problems
/// are principal sub-blocks of these.
#[derive(Debug, Clone)]
pub struct PeriodRisk {
    pub mean: MeanEstimate,
    pub linear: CovarianceEstimate,
    pub nonlinear: Option<CovarianceEstimate>,
    pub window_days: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RiskCache {
    periods: BTreeMap<Month, PeriodRisk>,
}

impl RiskCache {
    /// Estimate every requested month from the trailing `window_months` of
    /// daily data. Months whose window cannot be estimated are left out
    /// and logged.
    pub fn build(
        daily: &DailyReturnPanel,
        months: &[Month],
        window_months: u32,
        min_days: usize,
        nonlinear: bool,
    ) -> RiskCache {
        let periods: Vec<(Month, Option<PeriodRisk>)> = months
            .par_iter()
            .map(|&t| match estimate(daily, t, window_months, min_days, nonlinear) {
                Ok(p) => (t, Some(p)),
                Err(e) => {
                    log::warn!("no risk estimates for {t}: {e}");
                    (t, None)
                }
            })
            .collect();
        RiskCache {
            periods: periods.into_iter().filter_map(|(t, p)| p.map(|p| (t, p))).collect(),
        }
    }

    pub fn get(&self, t: Month) -> Option<&PeriodRisk> {
        self.periods.get(&t)
    }

    pub fn months(&self) -> impl Iterator<Item = Month> + '_ {
        self.periods.keys().copied()
    }

    pub fn insert(&mut self, t: Month, risk: PeriodRisk) {
        self.periods.insert(t, risk);
    }
}

fn estimate(daily: &DailyReturnPanel, t: Month, window_months: u32, min_days: usize, nonlinear: bool) -> Result<PeriodRisk> {
    let window = ReturnWindow::trailing(daily, t, window_months, min_days)?;
    let mean = rolling_mean(&window)?;
    let linear = linear_shrinkage(&window)?;
    let nonlinear = if !nonlinear {
        None
    } else if window.n_assets() < 2 {
        Some(nonlinear_shrinkage(&linear, window.n_days())?)
    } else {
        Some(nonlinear_shrinkage(&sample_covariance(&window)?, window.n_days())?)
    };
    Ok(PeriodRisk {
        mean,
        linear,
        nonlinear,
        window_days: window.n_days(),
    })
}
