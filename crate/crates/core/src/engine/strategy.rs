use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Month, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "EW")]
    Ew,
    #[serde(rename = "MV_RollMean_RollVar")]
    MvRollMeanRollVar,
    #[serde(rename = "MV_ML_RollVar")]
    MvMlRollVar,
    #[serde(rename = "MV_ML_NonlinearVar")]
    MvMlNonlinearVar,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::MvRollMeanRollVar,
        StrategyKind::MvMlRollVar,
        StrategyKind::MvMlNonlinearVar,
        StrategyKind::Ew,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Ew => "EW",
            StrategyKind::MvRollMeanRollVar => "MV_RollMean_RollVar",
            StrategyKind::MvMlRollVar => "MV_ML_RollVar",
            StrategyKind::MvMlNonlinearVar => "MV_ML_NonlinearVar",
        }
    }

    /// Series name in the compounded median-path output.
    pub fn path_label(self) -> &'static str {
        match self {
            StrategyKind::Ew => "EW",
            StrategyKind::MvRollMeanRollVar => "MV-Roll",
            StrategyKind::MvMlRollVar => "MV-ML-Roll",
            StrategyKind::MvMlNonlinearVar => "MV-ML-NL",
        }
    }

    pub fn uses_forecasts(self) -> bool {
        matches!(self, StrategyKind::MvMlRollVar | StrategyKind::MvMlNonlinearVar)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.label() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown strategy kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rebalance {
    Monthly,
    Quarterly,
    Annual,
}

impl Rebalance {
    /// Whether weights are re-solved at the close of `m`.
    pub fn is_date(self, m: Month) -> bool {
        match self {
            Rebalance::Monthly => true,
            Rebalance::Quarterly => m.is_quarter_end(),
            Rebalance::Annual => m.is_year_end(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Rebalance::Monthly => "monthly",
            Rebalance::Quarterly => "quarterly",
            Rebalance::Annual => "annual",
        }
    }
}

impl fmt::Display for Rebalance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Rebalance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Rebalance::Monthly, Rebalance::Quarterly, Rebalance::Annual]
            .into_iter()
            .find(|r| r.label() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown rebalance frequency `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub rebalance: Rebalance,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind, rebalance: Rebalance) -> Self {
        StrategySpec { kind, rebalance }
    }
}

/// `KIND/rebalance`, e.g. `MV_ML_RollVar/quarterly`.
impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.rebalance)
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (k, r) = s
            .split_once('/')
            .ok_or_else(|| Error::Validation(format!("strategy `{s}` is not KIND/rebalance")))?;
        Ok(StrategySpec::new(k.parse()?, r.parse()?))
    }
}
