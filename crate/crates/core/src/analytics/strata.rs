use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::bootstrap::{diff_in_medians_ci, BootstrapInterval, BootstrapSpec};
use super::quantiles::{cross_section_summary, CrossSectionSummary};
use crate::portfolio::{InvestorProfile, Level};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stratum {
    Education,
    RiskAversion,
    Income,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::Education, Stratum::RiskAversion, Stratum::Income];

    pub fn level(self, p: &InvestorProfile) -> Level {
        match self {
            Stratum::Education => p.education,
            Stratum::RiskAversion => p.risk_aversion,
            Stratum::Income => p.income,
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stratum::Education => "education",
            Stratum::RiskAversion => "risk_aversion",
            Stratum::Income => "income",
        })
    }
}

impl FromStr for Stratum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stratum::ALL
            .into_iter()
            .find(|k| k.to_string() == s.trim())
            .ok_or_else(|| Error::Validation(format!("unknown stratum `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSummary {
    pub stratum: Stratum,
    pub low: CrossSectionSummary,
    pub high: CrossSectionSummary,
    /// Median of the high level minus median of the low level.
    pub median_difference: f64,
    /// Bootstrap CI of the difference, when both levels have 10 or more
    /// investors and a spec was given.
    pub interval: Option<BootstrapInterval>,
}

/// Split per-investor values by a two-level profile stratum. Investors
/// without a profile are ignored.
pub fn stratified_summary(
    values: &BTreeMap<String, f64>,
    profiles: &[InvestorProfile],
    stratum: Stratum,
    bootstrap: Option<&BootstrapSpec>,
) -> Result<StratifiedSummary> {
    let by_id: BTreeMap<&str, &InvestorProfile> = profiles.iter().map(|p| (p.investor_id.as_str(), p)).collect();
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for (id, v) in values {
        if let Some(p) = by_id.get(id.as_str()) {
            match stratum.level(p) {
                Level::Low => low.push(*v),
                Level::High => high.push(*v),
            }
        }
    }
    if low.is_empty() || high.is_empty() {
        return Err(Error::Empty(format!("a level of {stratum} has no investors")));
    }
    let (ls, hs) = (cross_section_summary(&low)?, cross_section_summary(&high)?);
    let interval = match bootstrap {
        Some(spec) if low.len() >= 10 && high.len() >= 10 => Some(diff_in_medians_ci(&high, &low, spec)?),
        _ => None,
    };
    Ok(StratifiedSummary {
        stratum,
        low: ls,
        high: hs,
        median_difference: hs.median - ls.median,
        interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::Gender;

    fn profile(id: usize, ra: Level) -> InvestorProfile {
        InvestorProfile {
            investor_id: format!("i{id:03}"),
            age: 40,
            gender: Gender::Female,
            education: Level::Low,
            income: Level::High,
            risk_aversion: ra,
        }
    }

    #[test]
    fn shifted_level() {
        let mut values = BTreeMap::new();
        let mut profiles = Vec::new();
        for i in 0..40 {
            let ra = if i % 2 == 0 { Level::High } else { Level::Low };
            let base = (i / 2) as f64 * 0.37;
            values.insert(format!("i{i:03}"), if ra == Level::High { base + 2.0 } else { base });
            profiles.push(profile(i, ra));
        }
        let spec = BootstrapSpec { reps: 300, ..Default::default() };
        let s = stratified_summary(&values, &profiles, Stratum::RiskAversion, Some(&spec)).unwrap();
        assert!((s.median_difference - 2.0).abs() < 1e-12);
        assert!(s.interval.unwrap().contains(2.0));
        assert!(stratified_summary(&values, &profiles, Stratum::Education, None).is_err());
    }

    #[test]
    fn singleton_level() {
        let values: BTreeMap<String, f64> = [("i000".to_string(), 1.0), ("i001".to_string(), 4.0)].into();
        let profiles = vec![profile(0, Level::Low), profile(1, Level::High)];
        let s = stratified_summary(&values, &profiles, Stratum::RiskAversion, None).unwrap();
        assert_eq!(s.high.median, 4.0);
        assert_eq!(s.low.median, 1.0);
    }

    #[test]
    fn unknown_label() {
        assert!("religion".parse::<Stratum>().is_err());
        assert_eq!("income".parse::<Stratum>().unwrap(), Stratum::Income);
    }
}
