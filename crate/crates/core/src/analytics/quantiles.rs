use crate::{Error, Result};

/// Type-7 quantile: linear interpolation between order statistics at
/// position `(n − 1)p`. `None` for empty input.
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(sorted_quantile(&v, p))
}

pub(crate) fn sorted_quantile(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSectionSummary {
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn cross_section_summary(values: &[f64]) -> Result<CrossSectionSummary> {
    if values.is_empty() {
        return Err(Error::Empty("cross-section summary of no values".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(CrossSectionSummary {
        n: v.len(),
        q1: sorted_quantile(&v, 0.25),
        median: sorted_quantile(&v, 0.5),
        q3: sorted_quantile(&v, 0.75),
    })
}
