use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::fsio::{create, csv_err};
use crate::numfmt::fmt12;
use crate::{Error, Month, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssetClass {
    Stock,
    #[serde(rename = "ETF")]
    Etf,
}

impl fmt::Display for AssetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssetClass::Stock => "Stock",
            AssetClass::Etf => "ETF",
        })
    }
}

impl FromStr for AssetClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "Stock" | "stock" => Ok(AssetClass::Stock),
            "ETF" | "etf" => Ok(AssetClass::Etf),
            other => Err(format!("unknown asset class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AssetId {
    pub id: String,
    pub class: AssetClass,
}

impl AssetId {
    pub fn new(id: impl Into<String>, class: AssetClass) -> Self {
        AssetId {
            id: id.into(),
            class,
        }
    }

    pub fn stock(id: impl Into<String>) -> Self {
        Self::new(id, AssetClass::Stock)
    }
}

/// Daily simple returns, `[day × asset]`, row-major. Missing cells are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyReturnPanel {
    dates: Vec<NaiveDate>,
    assets: Vec<AssetId>,
    returns: Vec<f64>,
}

impl DailyReturnPanel {
    /// Build a panel, checking the calendar is strictly increasing and every
    /// present return exceeds -1. `None` cells are missing.
    pub fn new(
        dates: Vec<NaiveDate>,
        assets: Vec<AssetId>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if rows.len() != dates.len() {
            return Err(Error::Dimension(format!(
                "{} dates but {} rows",
                dates.len(),
                rows.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "calendar not strictly increasing at {}",
                w[1]
            )));
        }
        check_unique(&assets)?;
        let mut returns = Vec::with_capacity(dates.len() * assets.len());
        for (row, date) in rows.iter().zip(&dates) {
            if row.len() != assets.len() {
                return Err(Error::Dimension(format!(
                    "row {date} has {} cells for {} assets",
                    row.len(),
                    assets.len()
                )));
            }
            for (cell, asset) in row.iter().zip(&assets) {
                match cell {
                    Some(r) if !r.is_finite() || *r <= -1.0 => {
                        return Err(Error::Validation(format!(
                            "return {r} for {} on {date} must be finite and > -1",
                            asset.id
                        )))
                    }
                    Some(r) => returns.push(*r),
                    None => returns.push(f64::NAN),
                }
            }
        }
        Ok(DailyReturnPanel {
            dates,
            assets,
            returns,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[AssetId] {
        &self.assets
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn asset_index(&self, id: &str) -> Option<usize> {
        self.assets.iter().position(|a| a.id == id)
    }

    pub fn get(&self, day: usize, asset: usize) -> Option<f64> {
        let r = self.returns[day * self.assets.len() + asset];
        (!r.is_nan()).then_some(r)
    }

    pub fn is_missing(&self, day: usize, asset: usize) -> bool {
        self.returns[day * self.assets.len() + asset].is_nan()
    }

    /// Raw row with NaN marking missing cells.
    pub fn row(&self, day: usize) -> &[f64] {
        let n = self.assets.len();
        &self.returns[day * n..(day + 1) * n]
    }

    /// Column of one asset, NaN for missing.
    pub fn column(&self, asset: usize) -> Vec<f64> {
        (0..self.dates.len()).map(|d| self.row(d)[asset]).collect()
    }

    /// Indices of days whose date falls in `[from, to]` (inclusive months).
    pub fn day_range(&self, from: Month, to: Month) -> std::ops::Range<usize> {
        let lo = self.dates.partition_point(|d| Month::of(*d) < from);
        let hi = self.dates.partition_point(|d| Month::of(*d) <= to);
        lo..hi.max(lo)
    }

    pub fn first_month(&self) -> Option<Month> {
        self.dates.first().map(|d| Month::of(*d))
    }

    pub fn last_month(&self) -> Option<Month> {
        self.dates.last().map(|d| Month::of(*d))
    }

    /// Cumulative gross-return index per asset: `index[d] = ∏_{s≤d}(1+r_s)`,
    /// missing days carry the previous level.
    pub fn growth_index(&self) -> Vec<Vec<f64>> {
        let n = self.assets.len();
        let mut out = vec![Vec::with_capacity(self.dates.len()); n];
        let mut level = vec![1.0; n];
        for d in 0..self.dates.len() {
            for (a, lv) in level.iter_mut().enumerate() {
                let r = self.row(d)[a];
                if !r.is_nan() {
                    *lv *= 1.0 + r;
                }
                out[a].push(*lv);
            }
        }
        out
    }
}

/// Monthly simple returns, `[month × asset]`; missing cells are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyReturnPanel {
    pub months: Vec<Month>,
    pub assets: Vec<AssetId>,
    returns: Vec<f64>,
}

impl MonthlyReturnPanel {
    pub fn from_rows(
        months: Vec<Month>,
        assets: Vec<AssetId>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if rows.len() != months.len() || rows.iter().any(|r| r.len() != assets.len()) {
            return Err(Error::Dimension("monthly panel shape".into()));
        }
        let returns = rows
            .into_iter()
            .flatten()
            .map(|c| c.unwrap_or(f64::NAN))
            .collect();
        Ok(MonthlyReturnPanel {
            months,
            assets,
            returns,
        })
    }

    pub fn get(&self, month: usize, asset: usize) -> Option<f64> {
        let r = self.returns[month * self.assets.len() + asset];
        (!r.is_nan()).then_some(r)
    }

    pub fn month_index(&self, m: Month) -> Option<usize> {
        self.months.binary_search(&m).ok()
    }

    pub fn asset_index(&self, id: &str) -> Option<usize> {
        self.assets.iter().position(|a| a.id == id)
    }

    /// Sub-panel with the given assets, in the given order.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let idx: Vec<usize> = ids
            .iter()
            .map(|id| self.asset_index(id).ok_or_else(|| Error::UnknownAsset(id.clone())))
            .collect::<Result<_>>()?;
        let returns = (0..self.months.len())
            .flat_map(|m| idx.iter().map(move |&a| (m, a)))
            .map(|(m, a)| self.returns[m * self.assets.len() + a])
            .collect();
        Ok(MonthlyReturnPanel {
            months: self.months.clone(),
            assets: idx.iter().map(|&a| self.assets[a].clone()).collect(),
            returns,
        })
    }

    /// Series of one asset, `None` where missing.
    pub fn series(&self, asset: usize) -> Vec<Option<f64>> {
        (0..self.months.len()).map(|m| self.get(m, asset)).collect()
    }

    /// Map of month to return for one asset, skipping missing months.
    pub fn series_map(&self, asset: usize) -> BTreeMap<Month, f64> {
        self.months
            .iter()
            .enumerate()
            .filter_map(|(i, m)| self.get(i, asset).map(|r| (*m, r)))
            .collect()
    }
}

fn check_unique(assets: &[AssetId]) -> Result<()> {
    let mut seen = HashSet::new();
    for a in assets {
        if !seen.insert(a.id.as_str()) {
            return Err(Error::Validation(format!("duplicate asset id `{}`", a.id)));
        }
    }
    Ok(())
}

/// Compound daily returns into calendar-month returns. A month in which an
/// asset misses any trading day of the calendar is missing for that asset.
pub fn aggregate_to_monthly(daily: &DailyReturnPanel) -> Result<MonthlyReturnPanel> {
    if daily.n_days() == 0 || daily.n_assets() == 0 {
        return Err(Error::Empty("daily panel has no days or no assets".into()));
    }
    let n = daily.n_assets();
    let mut months = Vec::new();
    let mut returns = Vec::new();
    let mut d = 0;
    while d < daily.n_days() {
        let m = Month::of(daily.dates[d]);
        let mut gross = vec![1.0; n];
        while d < daily.n_days() && Month::of(daily.dates[d]) == m {
            for (g, r) in gross.iter_mut().zip(daily.row(d)) {
                // NaN propagates and marks the month missing
                *g *= 1.0 + r;
            }
            d += 1;
        }
        months.push(m);
        returns.extend(gross.into_iter().map(|g| g - 1.0));
    }
    Ok(MonthlyReturnPanel {
        months,
        assets: daily.assets.clone(),
        returns,
    })
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

/// Load a daily returns CSV (`date,<asset_id>,...`). The header must name
/// exactly the universe assets, in any order; columns come back in universe
/// order and rows sorted by date.
pub fn load_daily_returns(path: &Path, universe: &[AssetId]) -> Result<DailyReturnPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0).map(str::trim) != Some("date") {
        return Err(Error::parse(path, 1, "first column must be `date`"));
    }
    let wanted: HashMap<&str, usize> = universe
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id.as_str(), i))
        .collect();
    let mut col_to_asset = Vec::new();
    let mut seen = HashSet::new();
    for name in header.iter().skip(1) {
        let name = name.trim();
        let idx = *wanted
            .get(name)
            .ok_or_else(|| Error::parse(path, 1, format!("unknown asset column `{name}`")))?;
        if !seen.insert(idx) {
            return Err(Error::parse(path, 1, format!("duplicate column `{name}`")));
        }
        col_to_asset.push(idx);
    }
    let absent: Vec<String> = universe
        .iter()
        .enumerate()
        .filter(|(i, _)| !seen.contains(i))
        .map(|(_, a)| a.id.clone())
        .collect();
    if !absent.is_empty() {
        return Err(Error::MissingColumns(absent));
    }

    let mut rows: Vec<(NaiveDate, u64, Vec<Option<f64>>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let date = parse_date(&rec[0]).map_err(|m| Error::parse(path, line, m))?;
        let mut row = vec![None; universe.len()];
        for (cell, &asset) in rec.iter().skip(1).zip(&col_to_asset) {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            let r: f64 = cell
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad number `{cell}`")))?;
            if !r.is_finite() || r <= -1.0 {
                return Err(Error::Validation(format!(
                    "{}:{line}: return {r} for {} must be finite and > -1",
                    path.display(),
                    universe[asset].id
                )));
            }
            row[asset] = Some(r);
        }
        rows.push((date, line, row));
    }
    rows.sort_by_key(|(d, _, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::parse(path, w[1].1, format!("duplicate date {}", w[1].0)));
    }
    let (dates, rows): (Vec<_>, Vec<_>) = rows.into_iter().map(|(d, _, r)| (d, r)).unzip();
    DailyReturnPanel::new(dates, universe.to_vec(), rows)
}

pub fn write_daily_returns(panel: &DailyReturnPanel, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let mut line = String::from("date");
    for a in &panel.assets {
        line.push(',');
        line.push_str(&a.id);
    }
    writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    for (d, date) in panel.dates.iter().enumerate() {
        line.clear();
        line.push_str(&date.format("%Y-%m-%d").to_string());
        for r in panel.row(d) {
            line.push(',');
            if !r.is_nan() {
                line.push_str(&fmt12(*r));
            }
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_monthly_returns(panel: &MonthlyReturnPanel, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let mut line = String::from("month");
    for a in &panel.assets {
        line.push(',');
        line.push_str(&a.id);
    }
    writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    for (i, m) in panel.months.iter().enumerate() {
        line = m.to_string();
        for a in 0..panel.assets.len() {
            line.push(',');
            if let Some(r) = panel.get(i, a) {
                line.push_str(&fmt12(r));
            }
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Universe file: `asset_id,class`.
pub fn load_universe(path: &Path) -> Result<Vec<AssetId>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().map(str::trim).collect::<Vec<_>>() != ["asset_id", "class"] {
        return Err(Error::parse(path, 1, "header must be `asset_id,class`"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let class = rec[1].parse().map_err(|m: String| Error::parse(path, line, m))?;
        out.push(AssetId::new(rec[0].trim(), class));
    }
    check_unique(&out)?;
    Ok(out)
}

pub fn write_universe(assets: &[AssetId], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "asset_id,class").map_err(|e| Error::io(path, e))?;
    for a in assets {
        writeln!(out, "{},{}", a.id, a.class).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
