//! Shadow robo-investor ("alter ego") backtesting.
//!
//! Every human investor in a brokerage panel is paired with robots that may
//! only trade the assets the human held or traded over the trailing two
//! years. The robots allocate with an equal-weight rule or a long-only
//! mean-variance program fed by rolling or machine-learned return forecasts
//! and shrinkage covariance estimates. The crate measures the month-by-month
//! return spread between robot and human and summarizes it across strata,
//! crisis regimes and behavioral covariates.
//!
//! Module map:
//!
//! - [`market`]: return and predictor panels, CSV contracts, synthetic market.
//! - [`portfolio`]: trades to holdings, Modified Dietz returns, opportunity
//!   sets, admission filters, disposition effect.
//! - [`forecast`]: per-asset OLS / elastic net / random forest / neural net /
//!   ensemble forecasts with out-of-sample model selection.
//! - [`risk`]: rolling means and sample, linear-shrinkage and
//!   nonlinear-shrinkage covariances.
//! - [`allocator`]: long-only mean-variance solver with cash slack, equal
//!   weights and drift weights.
//! - [`engine`]: robo tracks, spreads and compounded median paths.
//! - [`analytics`]: quantile summaries, investor bootstrap, crisis splits,
//!   quantile regression.
//! - [`cohort`]: synthetic investor cohorts with a tunable disposition effect.
//! - [`pipeline`]: the generate / train / backtest / report stages.

pub mod allocator;
pub mod analytics;
pub mod cohort;
pub mod engine;
mod error;
mod fsio;
pub mod forecast;
pub mod market;
pub mod month;
pub mod numfmt;
pub mod pipeline;
pub mod portfolio;
pub mod risk;
pub mod seed;

pub use error::{Error, Result};
pub use month::Month;
