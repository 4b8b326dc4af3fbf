//! Asset-return and predictor panels.

mod panel;
mod predictors;
mod synthetic;

pub use panel::{
    aggregate_to_monthly, load_daily_returns, load_universe, write_daily_returns,
    write_monthly_returns, write_universe, AssetClass, AssetId, DailyReturnPanel,
    MonthlyReturnPanel,
};
pub use predictors::{
    load_predictors, predictor_index, write_predictors, PredictorPanel, N_PREDICTORS,
    PREDICTOR_NAMES,
};
pub(crate) use synthetic::initial_price;
pub use synthetic::{
    generate_synthetic_market, PredictorProcess, PredictorShock, SyntheticMarketSpec,
};
