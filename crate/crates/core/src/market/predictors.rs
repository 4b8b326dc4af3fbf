use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::fsio::{create, csv_err};
use crate::numfmt::fmt12;
use crate::{Error, Month, Result};

pub const N_PREDICTORS: usize = 21;

/// Canonical predictor order (column order of every predictor matrix).
pub const PREDICTOR_NAMES: [&str; N_PREDICTORS] = [
    "dp", "dy", "ep", "de", "svar", "bm", "ntis", "tbl", "lty", "ltr", "dfy", "infl", "SPvw",
    "SPvwx", "MktRF", "SMB", "HML", "RMW", "CMA", "RF", "Mom",
];

pub fn predictor_index(name: &str) -> Option<usize> {
    let name = if name == "Mkt-RF" { "MktRF" } else { name };
    PREDICTOR_NAMES.iter().position(|n| *n == name)
}

/// Monthly predictor matrix `[month × 21]` in canonical column order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorPanel {
    pub months: Vec<Month>,
    pub values: Vec<[f64; N_PREDICTORS]>,
}

impl PredictorPanel {
    pub fn new(months: Vec<Month>, values: Vec<[f64; N_PREDICTORS]>) -> Result<Self> {
        if months.len() != values.len() {
            return Err(Error::Dimension("predictor months vs rows".into()));
        }
        if let Some(w) = months.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "predictor months not strictly increasing at {}",
                w[1]
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite predictor value".into()));
        }
        Ok(PredictorPanel { months, values })
    }

    pub fn at(&self, m: Month) -> Option<&[f64; N_PREDICTORS]> {
        self.months.binary_search(&m).ok().map(|i| &self.values[i])
    }
}

/// Load a predictor CSV. The header must list exactly the 21 series after
/// `month`, in any order; columns are returned in canonical order.
pub fn load_predictors(path: &Path) -> Result<PredictorPanel> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0).map(str::trim) != Some("month") {
        return Err(Error::parse(path, 1, "first column must be `month`"));
    }
    let mut pos: HashMap<usize, usize> = HashMap::new();
    for (col, name) in header.iter().enumerate().skip(1) {
        let idx = predictor_index(name.trim())
            .ok_or_else(|| Error::parse(path, 1, format!("unknown predictor `{}`", name.trim())))?;
        if pos.insert(idx, col).is_some() {
            return Err(Error::parse(path, 1, format!("duplicate predictor `{}`", name.trim())));
        }
    }
    let absent: Vec<String> = PREDICTOR_NAMES
        .iter()
        .enumerate()
        .filter(|(i, _)| !pos.contains_key(i))
        .map(|(_, n)| n.to_string())
        .collect();
    if !absent.is_empty() {
        return Err(Error::MissingColumns(absent));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let month: Month = rec[0].parse().map_err(|m: String| Error::parse(path, line, m))?;
        let mut v = [0.0; N_PREDICTORS];
        for (k, slot) in v.iter_mut().enumerate() {
            let cell = rec[pos[&k]].trim();
            *slot = cell.parse().map_err(|_| {
                Error::parse(
                    path,
                    line,
                    format!("bad or missing value `{cell}` for {}", PREDICTOR_NAMES[k]),
                )
            })?;
        }
        rows.push((month, v));
    }
    rows.sort_by_key(|r| r.0);
    let (months, values) = rows.into_iter().unzip();
    PredictorPanel::new(months, values)
}

pub fn write_predictors(panel: &PredictorPanel, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "month,{}", PREDICTOR_NAMES.join(",")).map_err(|e| Error::io(path, e))?;
    for (m, v) in panel.months.iter().zip(&panel.values) {
        let cells: Vec<String> = v.iter().map(|x| fmt12(*x)).collect();
        writeln!(out, "{m},{}", cells.join(",")).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PredictorPanel {
        let months: Vec<Month> = Month::range("2001-01".parse().unwrap(), "2001-03".parse().unwrap()).collect();
        let values = (0..3)
            .map(|t| std::array::from_fn(|k| (t * 100 + k) as f64 / 7.0))
            .collect();
        PredictorPanel::new(months, values).unwrap()
    }

    #[test]
    fn canonical_round_trip() {
        let p = sample();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_predictors(&p, f.path()).unwrap();
        let q = load_predictors(f.path()).unwrap();
        assert_eq!(p.months, q.months);
        for (a, b) in p.values.iter().flatten().zip(q.values.iter().flatten()) {
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
    }

    #[test]
    fn permuted_columns_load_to_canonical_order() {
        let p = sample();
        let canonical = tempfile::NamedTempFile::new().unwrap();
        write_predictors(&p, canonical.path()).unwrap();
        let mut order: Vec<usize> = (0..N_PREDICTORS).collect();
        order.reverse();
        order.swap(3, 17);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let names: Vec<&str> = order.iter().map(|&k| PREDICTOR_NAMES[k]).collect();
        writeln!(f, "month,{}", names.join(",")).unwrap();
        for (m, v) in p.months.iter().zip(&p.values) {
            let cells: Vec<String> = order.iter().map(|&k| fmt12(v[k])).collect();
            writeln!(f, "{m},{}", cells.join(",")).unwrap();
        }
        f.flush().unwrap();
        assert_eq!(
            load_predictors(f.path()).unwrap(),
            load_predictors(canonical.path()).unwrap()
        );
    }

    #[test]
    fn missing_column_is_named() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let names: Vec<&str> = PREDICTOR_NAMES.iter().copied().filter(|n| *n != "dfy").collect();
        writeln!(f, "month,{}", names.join(",")).unwrap();
        f.flush().unwrap();
        let err = load_predictors(f.path()).unwrap_err();
        assert!(matches!(&err, Error::MissingColumns(v) if v == &["dfy".to_string()]));
        assert!(err.to_string().contains("dfy"));
    }
}
