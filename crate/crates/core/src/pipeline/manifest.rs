use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Provenance record written next to every stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub module_versions: BTreeMap<String, String>,
    /// Fixed numerical choices that affect results.
    pub parameters: BTreeMap<String, String>,
}

pub fn module_versions() -> BTreeMap<String, String> {
    let v = env!("CARGO_PKG_VERSION").to_string();
    ["market", "portfolio", "forecast", "risk", "allocator", "engine", "analytics", "cohort", "pipeline"]
        .into_iter()
        .map(|m| (m.to_string(), v.clone()))
        .collect()
}

pub fn parameters() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("risk.horizon_days".to_string(), crate::risk::HORIZON_DAYS.to_string()),
        (
            "risk.nonlinear_bandwidth_exponent".to_string(),
            format!("{:.6}", crate::risk::BANDWIDTH_EXPONENT),
        ),
        ("analytics.quantile_rule".to_string(), "type 7".to_string()),
        ("engine.annualization".to_string(), "12 x mean monthly x 100".to_string()),
    ])
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{}.json", self.stage));
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }
}
