use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::fsio::{create, csv_err};
use crate::numfmt::fmt12;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Buy,
    Sell,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Buy => 1.0,
            Direction::Sell => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub investor_id: String,
    pub timestamp: NaiveDateTime,
    pub asset: String,
    pub direction: Direction,
    /// Shares, strictly positive.
    pub quantity: f64,
    /// Currency per share, strictly positive.
    pub price: f64,
}

impl TradeRecord {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date()
    }

    pub fn value(&self) -> f64 {
        self.quantity * self.price
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quantity > 0.0 && self.quantity.is_finite()) {
            return Err(Error::Validation(format!(
                "trade of {} by {} has nonpositive quantity {}",
                self.asset, self.investor_id, self.quantity
            )));
        }
        if !(self.price > 0.0 && self.price.is_finite()) {
            return Err(Error::Validation(format!(
                "trade of {} by {} has nonpositive price {}",
                self.asset, self.investor_id, self.price
            )));
        }
        Ok(())
    }
}

/// Two-level stratum coding used by the profile file (`L` / `H`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Low,
    High,
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "L" => Ok(Level::Low),
            "H" => Ok(Level::High),
            o => Err(format!("expected L or H, found `{o}`")),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Low => "L",
            Level::High => "H",
        })
    }
}

pub type Education = Level;
pub type Income = Level;
pub type RiskAversion = Level;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "M" => Ok(Gender::Male),
            "F" => Ok(Gender::Female),
            o => Err(format!("expected M or F, found `{o}`")),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "M",
            Gender::Female => "F",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestorProfile {
    pub investor_id: String,
    pub age: u32,
    pub gender: Gender,
    pub education: Education,
    pub income: Income,
    pub risk_aversion: RiskAversion,
}

fn parse_timestamp(s: &str) -> std::result::Result<NaiveDateTime, String> {
    let s = s.trim();
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight"))
        .map_err(|_| format!("bad timestamp `{s}`"))
}

const TRADE_HEADER: [&str; 6] = ["investor_id", "timestamp", "asset_id", "direction", "quantity", "price"];
const PROFILE_HEADER: [&str; 6] = ["investor_id", "age", "gender", "education", "risk_aversion", "income"];

fn check_header(path: &Path, rdr: &mut csv::Reader<std::fs::File>, want: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != want {
        return Err(Error::parse(path, 1, format!("header must be `{}`", want.join(","))));
    }
    Ok(())
}

/// Trades CSV: `investor_id,timestamp,asset_id,direction,quantity,price`,
/// direction `B` or `S`.
pub fn load_trades(path: &Path) -> Result<Vec<TradeRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    check_header(path, &mut rdr, &TRADE_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let num = |k: usize, what: &str| -> Result<f64> {
            rec[k]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad {what} `{}`", &rec[k])))
        };
        let direction = match rec[3].trim() {
            "B" => Direction::Buy,
            "S" => Direction::Sell,
            o => return Err(Error::parse(path, line, format!("direction must be B or S, found `{o}`"))),
        };
        let t = TradeRecord {
            investor_id: rec[0].trim().to_string(),
            timestamp: parse_timestamp(&rec[1]).map_err(|m| Error::parse(path, line, m))?,
            asset: rec[2].trim().to_string(),
            direction,
            quantity: num(4, "quantity")?,
            price: num(5, "price")?,
        };
        t.validate()
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

pub fn write_trades(trades: &[TradeRecord], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", TRADE_HEADER.join(",")).map_err(io)?;
    for t in trades {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.investor_id,
            t.timestamp.format("%Y-%m-%dT%H:%M:%S"),
            t.asset,
            match t.direction {
                Direction::Buy => "B",
                Direction::Sell => "S",
            },
            fmt12(t.quantity),
            fmt12(t.price)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Profiles CSV: `investor_id,age,gender,education,risk_aversion,income`.
pub fn load_profiles(path: &Path) -> Result<Vec<InvestorProfile>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    check_header(path, &mut rdr, &PROFILE_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let p = |m: String| Error::parse(path, line, m);
        out.push(InvestorProfile {
            investor_id: rec[0].trim().to_string(),
            age: rec[1]
                .trim()
                .parse()
                .map_err(|_| p(format!("bad age `{}`", &rec[1])))?,
            gender: rec[2].parse().map_err(p)?,
            education: rec[3].parse().map_err(p)?,
            risk_aversion: rec[4].parse().map_err(p)?,
            income: rec[5].parse().map_err(p)?,
        });
    }
    Ok(out)
}

pub fn write_profiles(profiles: &[InvestorProfile], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", PROFILE_HEADER.join(",")).map_err(io)?;
    for p in profiles {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.investor_id, p.age, p.gender, p.education, p.risk_aversion, p.income
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Split a trade list by investor, each investor's trades in timestamp order
/// (stable for equal timestamps).
pub fn group_by_investor(trades: &[TradeRecord]) -> BTreeMap<String, Vec<TradeRecord>> {
    let mut map: BTreeMap<String, Vec<TradeRecord>> = BTreeMap::new();
    for t in trades {
        map.entry(t.investor_id.clone()).or_default().push(t.clone());
    }
    for v in map.values_mut() {
        v.sort_by_key(|t| t.timestamp);
    }
    map
}
