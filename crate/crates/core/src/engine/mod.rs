//! Robo "alter ego" tracks, return spreads and compounded median paths.
//!
//! At every formation month `t` the robot sees only the investor's
//! opportunity set, builds weights at the close of `t` and holds them over
//! `t + 1`. Between rebalance dates the weights drift with returns.

mod paths;
mod riskcache;
mod spread;
mod strategy;
mod track;

pub use paths::{compound_median_paths, write_paths, MedianPath, PATH_CAUTION};
pub use riskcache::{PeriodRisk, RiskCache};
pub use spread::{benchmark_spread, compute_spread, spread_between, write_spreads, SpreadSeries};
pub use strategy::{Rebalance, StrategyKind, StrategySpec};
pub use track::{
    run_alter_ego, run_all, write_tracks, AlterEgoTrack, InvestorContext, MarketContext, TrackPoint,
};
