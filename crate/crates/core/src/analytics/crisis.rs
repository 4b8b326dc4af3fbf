use std::collections::BTreeMap;
use std::fmt;

use super::quantiles::{cross_section_summary, CrossSectionSummary};
use crate::{Month, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    Pre,
    During,
    Post,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Pre, Regime::During, Regime::Post];
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Pre => "pre",
            Regime::During => "during",
            Regime::Post => "post",
        })
    }
}

/// Three contiguous regimes split by an inclusive crisis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CrisisCalendar {
    pub start: Month,
    pub end: Month,
}

impl Default for CrisisCalendar {
    /// The NBER recession of December 2007 to June 2009.
    fn default() -> Self {
        CrisisCalendar {
            start: Month::new(2007, 12).expect("valid"),
            end: Month::new(2009, 6).expect("valid"),
        }
    }
}

impl CrisisCalendar {
    pub fn regime(&self, m: Month) -> Regime {
        if m < self.start {
            Regime::Pre
        } else if m <= self.end {
            Regime::During
        } else {
            Regime::Post
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSummary {
    pub regime: Regime,
    /// Annualized mean monthly value per investor, in percent per year.
    pub per_investor: BTreeMap<String, f64>,
    pub summary: Option<CrossSectionSummary>,
}

/// Per-investor annualized means (12 × mean monthly value × 100) within
/// each regime, and their cross-sectional summary. Investors without
/// months in a regime are left out of that regime only.
pub fn crisis_split_stats(
    series: &BTreeMap<String, BTreeMap<Month, f64>>,
    calendar: &CrisisCalendar,
) -> Result<Vec<RegimeSummary>> {
    let mut out = Vec::new();
    for regime in Regime::ALL {
        let mut per_investor = BTreeMap::new();
        for (id, s) in series {
            let vals: Vec<f64> = s.iter().filter(|(m, _)| calendar.regime(**m) == regime).map(|(_, v)| *v).collect();
            if !vals.is_empty() {
                per_investor.insert(id.clone(), 1200.0 * vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        let values: Vec<f64> = per_investor.values().copied().collect();
        let summary = if values.is_empty() { None } else { Some(cross_section_summary(&values)?) };
        out.push(RegimeSummary {
            regime,
            per_investor,
            summary,
        });
    }
    Ok(out)
}
