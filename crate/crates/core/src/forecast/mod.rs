//! Per-asset return forecasting: OLS, elastic net, random forest, a small
//! neural network and their equal-weight ensemble, trained on rolling
//! ten-year windows and selected by out-of-sample MSE.

mod elastic_net;
mod features;
mod forest;
mod linear;
mod neural;
mod panel;
mod rolling;
mod selection;

use std::fmt;
use std::str::FromStr;

pub use elastic_net::{
    fit_elastic_net, fit_elastic_net_fixed, lambda_grid, lambda_max, ElasticNetModel, EN_ALPHAS,
    EN_LAMBDA_POINTS, EN_LAMBDA_RATIO,
};
pub use features::{make_features, FeatureSet, FEATURE_NAMES, N_FEATURES};
pub use forest::{fit_random_forest, Forest, ForestModel, ForestParams, RF_DEPTHS, RF_MTRY, RF_TREES};
pub use linear::{fit_ols, LinearModel, Standardizer};
pub use neural::{fit_neural_net, Mlp, NeuralModel, NeuralParams, NN_L2, NN_LEARNING_RATES};
pub use panel::{load_forecasts, write_forecasts, ForecastPanel, ForecastRecord};
pub use rolling::{
    en_l2_ranking, rolling_retrain, window_starts, AssetFit, RollingConfig, WindowResult,
    MIN_USABLE_MONTHS,
};
pub use selection::{ensemble_predict, evaluate_and_select, mae, mse, select_winner, KindErrors};

/// The five forecasting model kinds, in canonical (file) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Ols,
    En,
    Rf,
    Nn,
    Comb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Ols, ModelKind::En, ModelKind::Rf, ModelKind::Nn, ModelKind::Comb];

    /// Order used to break MSE ties: simpler models first.
    pub const TIE_PRIORITY: [ModelKind; 5] =
        [ModelKind::En, ModelKind::Nn, ModelKind::Comb, ModelKind::Rf, ModelKind::Ols];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Ols => "OLS",
            ModelKind::En => "EN",
            ModelKind::Rf => "RF",
            ModelKind::Nn => "NN",
            ModelKind::Comb => "Comb",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.label() == s.trim())
            .ok_or_else(|| format!("unknown model kind `{s}`"))
    }
}
