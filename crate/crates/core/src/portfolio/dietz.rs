use chrono::{Datelike, NaiveDate};

use crate::Month;

/// External flow into (+) or out of (-) the portfolio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CashFlow {
    pub date: NaiveDate,
    pub amount: f64,
}

/// Modified Dietz return for `month`:
/// `(EMV - BMV - ΣCF) / (BMV + Σ w_j CF_j)` with `w_j` the fraction of the
/// month's calendar days remaining after flow `j`. `None` when the
/// denominator vanishes.
pub fn modified_dietz_return(
    month: Month,
    begin_value: f64,
    end_value: f64,
    flows: &[CashFlow],
) -> Option<f64> {
    let days = month.days() as f64;
    let mut total = 0.0;
    let mut weighted = 0.0;
    let mut scale = begin_value.abs();
    for f in flows {
        debug_assert_eq!(Month::of(f.date), month);
        let w = (days - f.date.day() as f64) / days;
        total += f.amount;
        weighted += w * f.amount;
        scale += f.amount.abs();
    }
    let denom = begin_value + weighted;
    if scale == 0.0 || denom.abs() <= 1e-12 * scale {
        return None;
    }
    if flows.iter().all(|f| f.amount == 0.0) {
        return Some(end_value / begin_value - 1.0);
    }
    Some((end_value - begin_value - total) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn june() -> Month {
        "2005-06".parse().unwrap()
    }

    #[test]
    fn no_flow_is_simple_return() {
        assert_eq!(modified_dietz_return(june(), 100.0, 110.0, &[]), Some(110.0 / 100.0 - 1.0));
    }

    #[test]
    fn mid_month_inflow() {
        let f = CashFlow {
            date: NaiveDate::from_ymd_opt(2005, 6, 15).unwrap(),
            amount: 10.0,
        };
        assert_eq!(modified_dietz_return(june(), 100.0, 110.0, &[f]), Some(0.0));
    }

    #[test]
    fn zero_denominator_is_undefined() {
        let f = CashFlow {
            date: june().last_day(),
            amount: 50.0,
        };
        assert_eq!(modified_dietz_return(june(), 0.0, 50.0, &[f]), None);
        assert_eq!(modified_dietz_return(june(), 0.0, 0.0, &[]), None);
    }

    #[test]
    fn matches_day_counting_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let month = Month::new(2000 + rng.random_range(0..12), rng.random_range(1..=12)).unwrap();
            let flows: Vec<CashFlow> = (0..rng.random_range(0..6))
                .map(|_| CashFlow {
                    date: month.first_day() + chrono::Days::new(rng.random_range(0..month.days()) as u64),
                    amount: rng.random_range(-50.0..80.0),
                })
                .collect();
            let bmv = rng.random_range(100.0..1000.0);
            let emv = bmv * rng.random_range(0.8..1.2);
            // oracle: count days strictly after the flow date by walking the calendar
            let mut weighted = 0.0;
            let mut total = 0.0;
            for f in &flows {
                let mut remaining = 0;
                let mut d = f.date.succ_opt().unwrap();
                while Month::of(d) == month {
                    remaining += 1;
                    d = d.succ_opt().unwrap();
                }
                weighted += f.amount * remaining as f64 / month.days() as f64;
                total += f.amount;
            }
            let want = (emv - bmv - total) / (bmv + weighted);
            let got = modified_dietz_return(month, bmv, emv, &flows).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }
}
