//! Intermediate CSVs passed between backtest and report.

use std::collections::BTreeMap;
use std::path::Path;

use crate::fsio::{create, csv_err};
use crate::numfmt::fmt12;
use crate::portfolio::BehavioralMetrics;
use crate::{Error, Month, Result};

/// Per-investor monthly series keyed by investor id.
pub type SeriesByInvestor = BTreeMap<String, BTreeMap<Month, f64>>;

pub(crate) fn write_rows<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of a headed CSV as string maps, checked for the required columns.
fn read_rows(path: &Path, required: &[&str]) -> Result<Vec<(u64, BTreeMap<String, String>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let missing: Vec<String> =
        required.iter().filter(|c| !header.iter().any(|h| h == *c)).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        out.push((line, header.iter().cloned().zip(rec.iter().map(str::to_string)).collect()));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, row: &BTreeMap<String, String>, col: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = &row[col];
    raw.parse().map_err(|e| Error::parse(path, line, format!("column `{col}`: `{raw}`: {e}")))
}

pub(crate) fn write_series(series: &SeriesByInvestor, path: &Path) -> Result<()> {
    let rows = series
        .iter()
        .flat_map(|(id, s)| s.iter().map(move |(m, r)| vec![id.clone(), m.to_string(), fmt12(*r)]));
    write_rows(path, &["investor_id", "month", "return"], rows)
}

/// `investor_id,month,return` as written by the backtest stage.
pub fn load_investor_returns(path: &Path) -> Result<SeriesByInvestor> {
    let mut out = SeriesByInvestor::new();
    for (line, row) in read_rows(path, &["investor_id", "month", "return"])? {
        let m: Month = field(path, line, &row, "month")?;
        let r: f64 = field(path, line, &row, "return")?;
        out.entry(row["investor_id"].clone()).or_default().insert(m, r);
    }
    Ok(out)
}

/// Robo returns from `tracks.csv`, keyed by strategy label then investor.
pub fn load_tracks(path: &Path) -> Result<BTreeMap<String, SeriesByInvestor>> {
    let mut out: BTreeMap<String, SeriesByInvestor> = BTreeMap::new();
    for (line, row) in read_rows(path, &["investor_id", "strategy", "month", "robo_return"])? {
        let m: Month = field(path, line, &row, "month")?;
        let r: f64 = field(path, line, &row, "robo_return")?;
        out.entry(row["strategy"].clone())
            .or_default()
            .entry(row["investor_id"].clone())
            .or_default()
            .insert(m, r);
    }
    Ok(out)
}

/// Annualized spreads from `spreads.csv`, keyed by strategy then investor.
pub fn load_spreads(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (line, row) in read_rows(path, &["investor_id", "strategy", "annualized_spread_pct"])? {
        let v: f64 = field(path, line, &row, "annualized_spread_pct")?;
        out.entry(row["strategy"].clone()).or_default().insert(row["investor_id"].clone(), v);
    }
    Ok(out)
}

const BEHAVIOR_HEADER: [&str; 9] = [
    "investor_id",
    "realized_gains",
    "realized_losses",
    "paper_gains",
    "paper_losses",
    "sale_days",
    "disposition_effect",
    "trading_frequency",
    "frequency_quartile",
];

pub(crate) fn write_behavior(metrics: &[BehavioralMetrics], path: &Path) -> Result<()> {
    let rows = metrics.iter().map(|b| {
        let c = &b.counts;
        vec![
            b.investor_id.clone(),
            c.realized_gains.to_string(),
            c.realized_losses.to_string(),
            c.paper_gains.to_string(),
            c.paper_losses.to_string(),
            c.sale_days.to_string(),
            b.disposition_effect.map(fmt12).unwrap_or_default(),
            fmt12(b.trading_frequency),
            b.frequency_quartile.map(|q| q.to_string()).unwrap_or_default(),
        ]
    });
    write_rows(path, &BEHAVIOR_HEADER, rows)
}

/// The regression inputs of one investor.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorRow {
    pub investor_id: String,
    /// Empty when undefined.
    pub disposition_effect: Option<f64>,
    pub trading_frequency: f64,
    pub frequency_quartile: u8,
}

pub fn load_behavior(path: &Path) -> Result<Vec<BehaviorRow>> {
    let mut out = Vec::new();
    for (line, row) in read_rows(path, &BEHAVIOR_HEADER)? {
        let de = &row["disposition_effect"];
        out.push(BehaviorRow {
            investor_id: row["investor_id"].clone(),
            disposition_effect: if de.is_empty() { None } else { Some(field(path, line, &row, "disposition_effect")?) },
            trading_frequency: field(path, line, &row, "trading_frequency")?,
            frequency_quartile: field(path, line, &row, "frequency_quartile")?,
        });
    }
    Ok(out)
}
