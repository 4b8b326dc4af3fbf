//! Cross-sectional summaries, investor bootstrap, crisis regimes and
//! quantile regression.

mod bootstrap;
mod crisis;
mod quantiles;
mod quantreg;
mod strata;

pub use bootstrap::{
    bootstrap_median_ci, diff_in_medians_ci, pivotal_interval, BootstrapInterval, BootstrapSpec,
};
pub use crisis::{crisis_split_stats, CrisisCalendar, Regime, RegimeSummary};
pub use quantiles::{cross_section_summary, median, quantile, CrossSectionSummary};
pub use quantreg::{
    check_collinearity, fit_quantile, pinball, pinball_loss, quantile_regression, stars,
    write_quantreg, QuantRegRow, QuantileRegSpec,
};
pub use strata::{stratified_summary, StratifiedSummary, Stratum};
