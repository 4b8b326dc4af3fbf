use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::fsio;
use crate::{Error, Month, Result};

/// Per-investor inputs to the admission screen.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestorHistory {
    pub investor_id: String,
    /// Defined monthly returns.
    pub returns: BTreeMap<Month, f64>,
    /// Opportunity-set size at each month the investor has a return.
    pub opportunity_sizes: BTreeMap<Month, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AdmissionRule {
    /// Absolute monthly return above which a month is an outlier.
    pub outlier_threshold: f64,
    /// Investors with more outlier months than this are dropped.
    pub max_outlier_months: usize,
    pub min_months: usize,
    pub min_opportunity: usize,
}

impl Default for AdmissionRule {
    fn default() -> Self {
        AdmissionRule {
            outlier_threshold: 3.0,
            max_outlier_months: 1,
            min_months: 4,
            min_opportunity: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExclusionReason {
    Outlier,
    InsufficientHistory,
    OpportunitySet,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::Outlier => "outlier",
            ExclusionReason::InsufficientHistory => "insufficient-history",
            ExclusionReason::OpportunitySet => "opportunity-set",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub investor_id: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdmissionReport {
    /// Admitted investors with their outlier months removed.
    pub admitted: Vec<InvestorHistory>,
    pub excluded: Vec<Exclusion>,
}

/// Screen investors in order: outliers, history length, opportunity-set
/// size. A single outlier month is dropped from the series; more than
/// `max_outlier_months` exclude the investor.
pub fn apply_admission_filters(investors: &[InvestorHistory], rule: &AdmissionRule) -> AdmissionReport {
    let mut report = AdmissionReport::default();
    for inv in investors {
        let outliers: Vec<Month> = inv
            .returns
            .iter()
            .filter(|(_, r)| r.abs() > rule.outlier_threshold)
            .map(|(m, _)| *m)
            .collect();
        let reason = if outliers.len() > rule.max_outlier_months {
            Some(ExclusionReason::Outlier)
        } else if inv.returns.len() - outliers.len() < rule.min_months {
            Some(ExclusionReason::InsufficientHistory)
        } else if inv
            .returns
            .keys()
            .filter(|m| !outliers.contains(m))
            .any(|m| inv.opportunity_sizes.get(m).copied().unwrap_or(0) < rule.min_opportunity)
        {
            Some(ExclusionReason::OpportunitySet)
        } else {
            None
        };
        match reason {
            Some(reason) => report.excluded.push(Exclusion {
                investor_id: inv.investor_id.clone(),
                reason,
            }),
            None => {
                let mut kept = inv.clone();
                for m in &outliers {
                    kept.returns.remove(m);
                }
                report.admitted.push(kept);
            }
        }
    }
    report
}

/// Exclusion report CSV: `investor_id,reason`.
pub fn write_exclusions(excluded: &[Exclusion], path: &Path) -> Result<()> {
    let mut w = fsio::create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "investor_id,reason").map_err(io)?;
    for e in excluded {
        writeln!(w, "{},{}", e.investor_id, e.reason).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(id: &str, rets: &[f64], sizes: &[usize]) -> InvestorHistory {
        let m0: Month = "2005-01".parse().unwrap();
        InvestorHistory {
            investor_id: id.into(),
            returns: rets.iter().enumerate().map(|(i, r)| (m0.plus(i as i64), *r)).collect(),
            opportunity_sizes: sizes.iter().enumerate().map(|(i, n)| (m0.plus(i as i64), *n)).collect(),
        }
    }

    fn reasons(r: &AdmissionReport) -> Vec<(String, String)> {
        r.excluded.iter().map(|e| (e.investor_id.clone(), e.reason.to_string())).collect()
    }

    #[test]
    fn three_months_is_insufficient() {
        let r = apply_admission_filters(&[history("a", &[0.01; 3], &[2; 3])], &AdmissionRule::default());
        assert_eq!(reasons(&r), vec![("a".into(), "insufficient-history".into())]);
    }

    #[test]
    fn singleton_opportunity_set_excludes() {
        let r = apply_admission_filters(&[history("b", &[0.01; 6], &[2, 2, 1, 2, 2, 2])], &AdmissionRule::default());
        assert_eq!(reasons(&r), vec![("b".into(), "opportunity-set".into())]);
    }

    #[test]
    fn passing_investor_is_admitted() {
        let r = apply_admission_filters(&[history("c", &[0.01; 6], &[3; 6])], &AdmissionRule::default());
        assert!(r.excluded.is_empty());
        assert_eq!(r.admitted[0].returns.len(), 6);
    }

    #[test]
    fn outliers() {
        let one = history("d", &[0.01, 3.5, 0.01, 0.02, 0.0], &[2; 5]);
        let two = history("e", &[0.01, 3.5, -3.2, 0.02, 0.0, 0.0], &[2; 6]);
        let r = apply_admission_filters(&[one, two], &AdmissionRule::default());
        assert_eq!(r.admitted.len(), 1);
        assert_eq!(r.admitted[0].returns.len(), 4);
        assert_eq!(reasons(&r), vec![("e".into(), "outlier".into())]);
    }

    #[test]
    fn exclusion_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let ex = vec![Exclusion { investor_id: "a".into(), reason: ExclusionReason::OpportunitySet }];
        write_exclusions(&ex, &p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "investor_id,reason\na,opportunity-set\n");
    }
}
