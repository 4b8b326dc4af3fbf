//! From raw trades to holdings, investor returns, opportunity sets and
//! behavioral metrics.

mod admission;
mod behavior;
mod dietz;
mod holdings;
mod opportunity;
mod records;
mod valuation;

pub use admission::{
    apply_admission_filters, write_exclusions, AdmissionReport, AdmissionRule, Exclusion,
    ExclusionReason, InvestorHistory,
};
pub use behavior::{
    assign_frequency_quartiles, behavioral_metrics, disposition_counts, BehavioralMetrics,
    DispositionCounts,
};
pub use dietz::{modified_dietz_return, CashFlow};
pub use holdings::{build_holdings, HoldingsLedger};
pub use opportunity::{opportunity_set, OpportunitySet};
pub use records::{
    group_by_investor, load_profiles, load_trades, write_profiles, write_trades, Direction,
    Education, Gender, Income, InvestorProfile, Level, RiskAversion, TradeRecord,
};
pub use valuation::{investor_returns, PriceBook};
