use crate::market::DailyReturnPanel;
use crate::{Error, Month, Result};

/// Months of daily data behind each estimate.
pub const WINDOW_MONTHS: u32 = 24;
/// Assets with fewer valid days in the window are left out of the period.
pub const MIN_VALID_DAYS: usize = 60;

/// Daily returns of the trailing window, one column per retained asset,
/// NaN where missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnWindow {
    pub assets: Vec<String>,
    columns: Vec<Vec<f64>>,
    /// Assets dropped for too few valid days.
    pub dropped: Vec<String>,
}

impl ReturnWindow {
    /// Trading days in the `months` months ending with `t`.
    pub fn trailing(panel: &DailyReturnPanel, t: Month, months: u32, min_days: usize) -> Result<Self> {
        let days = panel.day_range(t.plus(1 - months as i64), t);
        if days.is_empty() {
            return Err(Error::Empty(format!("no trading days in the window ending {t}")));
        }
        let mut assets = Vec::new();
        let mut columns = Vec::new();
        let mut dropped = Vec::new();
        for (a, id) in panel.assets().iter().enumerate() {
            let col: Vec<f64> = days.clone().map(|d| panel.row(d)[a]).collect();
            if col.iter().filter(|r| !r.is_nan()).count() >= min_days {
                assets.push(id.id.clone());
                columns.push(col);
            } else {
                dropped.push(id.id.clone());
            }
        }
        if !dropped.is_empty() {
            log::debug!("window ending {t}: dropped {} assets with < {min_days} valid days", dropped.len());
        }
        Ok(ReturnWindow { assets, columns, dropped })
    }

    /// Window from explicit columns of equal length.
    pub fn from_columns(assets: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if assets.len() != columns.len() {
            return Err(Error::Dimension(format!("{} assets, {} columns", assets.len(), columns.len())));
        }
        let k = columns.first().map_or(0, Vec::len);
        if k == 0 || columns.iter().any(|c| c.len() != k) {
            return Err(Error::Dimension("window columns must be nonempty and of equal length".into()));
        }
        Ok(ReturnWindow { assets, columns, dropped: Vec::new() })
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_days(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, a: usize) -> &[f64] {
        &self.columns[a]
    }

    /// Row indices where every asset is observed.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n_days())
            .filter(|&d| self.columns.iter().all(|c| !c[d].is_nan()))
            .collect()
    }

    /// Same window with every return multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        ReturnWindow {
            assets: self.assets.clone(),
            columns: self.columns.iter().map(|col| col.iter().map(|r| r * c).collect()).collect(),
            dropped: self.dropped.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::AssetId;
    use chrono::{Datelike, NaiveDate};

    #[test]
    fn trailing_window_drops_thin_assets() {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
        let dates: Vec<NaiveDate> = (0..1200)
            .map(|i| start + chrono::Days::new(i))
            .filter(|d| d.weekday().num_days_from_monday() < 5)
            .collect();
        let n = dates.len();
        let rows = (0..n)
            .map(|d| vec![Some(0.001), if d + 50 >= n { Some(0.0) } else { None }])
            .collect();
        let p = DailyReturnPanel::new(dates, vec![AssetId::stock("A"), AssetId::stock("B")], rows).unwrap();
        let t = p.last_month().unwrap();
        let w = ReturnWindow::trailing(&p, t, 24, 60).unwrap();
        assert_eq!(w.assets, vec!["A"]);
        assert_eq!(w.dropped, vec!["B"]);
        let expect = p.day_range(t.plus(-23), t).len();
        assert_eq!(w.n_days(), expect);
    }
}
