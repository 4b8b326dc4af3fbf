use rand::Rng;
use rayon::prelude::*;

use super::quantiles::{median, sorted_quantile};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BootstrapSpec {
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        BootstrapSpec {
            reps: 1000,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl BootstrapSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 200 {
            return Err(Error::config("bootstrap.reps", format!("need at least 200 repetitions, got {}", self.reps)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("bootstrap.alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Pivotal interval `[2θ̂ − θ*_(1−α/2), 2θ̂ − θ*_(α/2)]` with the draws
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Bootstrap statistics in repetition order.
    pub draws: Vec<f64>,
}

impl BootstrapInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

pub fn pivotal_interval(estimate: f64, draws: Vec<f64>, alpha: f64) -> BootstrapInterval {
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    let hi = sorted_quantile(&sorted, 1.0 - alpha / 2.0);
    let lo = sorted_quantile(&sorted, alpha / 2.0);
    BootstrapInterval {
        estimate,
        lower: 2.0 * estimate - hi,
        upper: 2.0 * estimate - lo,
        draws,
    }
}

fn resample(values: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).collect()
}

/// Pivotal CI for the cross-sectional median of a per-investor statistic,
/// resampling investors with replacement.
pub fn bootstrap_median_ci(values: &[f64], spec: &BootstrapSpec) -> Result<BootstrapInterval> {
    if values.len() < 10 {
        return Err(Error::Validation(format!("bootstrap needs at least 10 investors, got {}", values.len())));
    }
    let estimate = median(values).expect("nonempty");
    let draws: Vec<f64> = (0..spec.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(spec.seed, &[r as u64]);
            median(&resample(values, &mut rng)).expect("nonempty")
        })
        .collect();
    Ok(pivotal_interval(estimate, draws, spec.alpha))
}

/// Canonical order of two groups: by size, then by sorted values.
fn canonical_first(a: &[f64], b: &[f64]) -> bool {
    if a.len() != b.len() {
        return a.len() < b.len();
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    for (x, y) in sa.iter().zip(&sb) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

/// Pivotal CI for `median(A) − median(B)`, resampling both groups in every
/// repetition. Swapping the groups negates and reverses the interval.
pub fn diff_in_medians_ci(a: &[f64], b: &[f64], spec: &BootstrapSpec) -> Result<BootstrapInterval> {
    if a.len() < 10 || b.len() < 10 {
        return Err(Error::Validation(format!(
            "each group needs at least 10 investors, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let flip = !canonical_first(a, b);
    let (first, second) = if flip { (b, a) } else { (a, b) };
    let estimate = median(first).expect("nonempty") - median(second).expect("nonempty");
    let draws: Vec<f64> = (0..spec.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(spec.seed, &[r as u64]);
            let x = resample(first, &mut rng);
            let y = resample(second, &mut rng);
            median(&x).expect("nonempty") - median(&y).expect("nonempty")
        })
        .collect();
    let ci = pivotal_interval(estimate, draws, spec.alpha);
    Ok(if flip {
        BootstrapInterval {
            estimate: -ci.estimate,
            lower: -ci.upper,
            upper: -ci.lower,
            draws: ci.draws.into_iter().map(|d| -d).collect(),
        }
    } else {
        ci
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| shift + { let z: f64 = StandardNormal.sample(&mut rng); z }).collect()
    }

    fn spec() -> BootstrapSpec {
        BootstrapSpec { reps: 400, alpha: 0.05, seed: 3 }
    }

    #[test]
    fn degenerate_sample_zero_width() {
        let ci = bootstrap_median_ci(&[2.0; 20], &spec()).unwrap();
        assert_eq!((ci.lower, ci.estimate, ci.upper), (2.0, 2.0, 2.0));
    }

    #[test]
    fn pivotal_identity_on_draws() {
        let ci = bootstrap_median_ci(&gaussian(1, 50, 0.0), &spec()).unwrap();
        let mut d = ci.draws.clone();
        d.sort_by(f64::total_cmp);
        assert!((ci.lower - (2.0 * ci.estimate - sorted_quantile(&d, 0.975))).abs() <= 1e-12);
        assert!((ci.upper - (2.0 * ci.estimate - sorted_quantile(&d, 0.025))).abs() <= 1e-12);
    }

    #[test]
    fn shifted_groups() {
        let a = gaussian(2, 200, 1.5);
        let b = gaussian(3, 200, 0.0);
        assert!(diff_in_medians_ci(&a, &b, &spec()).unwrap().contains(1.5));
        assert!(diff_in_medians_ci(&a, &a, &spec()).unwrap().contains(0.0));
    }

    #[test]
    fn swap_is_antisymmetric() {
        let a = gaussian(4, 30, 0.3);
        let b = gaussian(5, 40, 0.0);
        let ab = diff_in_medians_ci(&a, &b, &spec()).unwrap();
        let ba = diff_in_medians_ci(&b, &a, &spec()).unwrap();
        assert_eq!(ab.lower, -ba.upper);
        assert_eq!(ab.upper, -ba.lower);
        assert_eq!(ab.estimate, -ba.estimate);
    }

    #[test]
    fn small_samples_rejected() {
        assert!(bootstrap_median_ci(&[1.0; 9], &spec()).is_err());
        assert!(BootstrapSpec { reps: 100, ..spec() }.validate().is_err());
    }
}
