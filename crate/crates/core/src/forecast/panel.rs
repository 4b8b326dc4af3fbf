use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use super::ModelKind;
use crate::fsio;
use crate::numfmt::fmt12;
use crate::{Error, Month, Result};

/// Winning-model forecast of next month's return, made at `month`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub month: Month,
    pub asset: String,
    pub forecast: f64,
    pub winner: ModelKind,
    /// Test-sample MSE per kind in [`ModelKind::ALL`] order.
    pub mse: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForecastPanel {
    records: Vec<ForecastRecord>,
    index: HashMap<(String, Month), usize>,
}

impl ForecastPanel {
    /// Records are sorted by (month, asset); duplicates are an error.
    pub fn new(mut records: Vec<ForecastRecord>) -> Result<Self> {
        records.sort_by(|a, b| (a.month, &a.asset).cmp(&(b.month, &b.asset)));
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert((r.asset.clone(), r.month), i).is_some() {
                return Err(Error::Validation(format!("duplicate forecast for {} at {}", r.asset, r.month)));
            }
        }
        Ok(ForecastPanel { records, index })
    }

    pub fn records(&self) -> &[ForecastRecord] {
        &self.records
    }

    pub fn get(&self, asset: &str, month: Month) -> Option<&ForecastRecord> {
        self.index.get(&(asset.to_string(), month)).map(|&i| &self.records[i])
    }

    pub fn forecast(&self, asset: &str, month: Month) -> Option<f64> {
        self.get(asset, month).map(|r| r.forecast)
    }

    pub fn months(&self) -> BTreeSet<Month> {
        self.records.iter().map(|r| r.month).collect()
    }

    /// Share of assets forecast at `month` whose forecast is negative;
    /// `None` when nothing is forecast that month.
    pub fn negative_fraction(&self, month: Month) -> Option<f64> {
        let lo = self.records.partition_point(|r| r.month < month);
        let hi = self.records.partition_point(|r| r.month <= month);
        let n = hi - lo;
        (n > 0).then(|| self.records[lo..hi].iter().filter(|r| r.forecast < 0.0).count() as f64 / n as f64)
    }
}

const HEADER: &str = "month,asset_id,forecast,winner,mse_ols,mse_en,mse_rf,mse_nn,mse_comb";

/// Forecast panel CSV.
pub fn write_forecasts(panel: &ForecastPanel, path: &Path) -> Result<()> {
    let mut w = fsio::create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{HEADER}").map_err(io)?;
    for r in &panel.records {
        write!(w, "{},{},{},{}", r.month, r.asset, fmt12(r.forecast), r.winner).map_err(io)?;
        for m in r.mse {
            write!(w, ",{}", fmt12(m)).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_forecasts(path: &Path) -> Result<ForecastPanel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(HEADER) {
        return Err(Error::parse(path, 1, format!("header must be `{HEADER}`")));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i as u64 + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::parse(path, ln, format!("expected 9 fields, found {}", f.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::parse(path, ln, format!("bad number `{s}`")));
        let mut mse = [0.0; 5];
        for (k, m) in mse.iter_mut().enumerate() {
            *m = num(f[4 + k])?;
        }
        records.push(ForecastRecord {
            month: f[0].parse().map_err(|e| Error::parse(path, ln, format!("{e}")))?,
            asset: f[1].trim().to_string(),
            forecast: num(f[2])?,
            winner: f[3].parse().map_err(|e: String| Error::parse(path, ln, e))?,
            mse,
        });
    }
    ForecastPanel::new(records)
}
