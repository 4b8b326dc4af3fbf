use nalgebra::DMatrix;

use super::sample::pairwise_covariance;
use super::{CovarianceEstimate, Estimator, ReturnWindow};
use crate::{Error, Result};

/// Constant-correlation target: the sample variances on the diagonal and
/// the average sample correlation off it.
fn constant_correlation_target(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let sd: Vec<f64> = (0..n).map(|i| s[(i, i)].sqrt()).collect();
    let rbar = average_correlation(s, &sd);
    DMatrix::from_fn(n, n, |i, j| if i == j { s[(i, i)] } else { rbar * sd[i] * sd[j] })
}

fn average_correlation(s: &DMatrix<f64>, sd: &[f64]) -> f64 {
    let n = s.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = sd[i] * sd[j];
                sum += if d > 0.0 { s[(i, j)] / d } else { 0.0 };
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

/// Optimal intensity toward the constant-correlation target, estimated
/// from the demeaned complete rows (plug-in estimates of the asymptotic
/// variances π, covariances ρ and misspecification γ), clipped to [0, 1].
fn optimal_intensity(x: &DMatrix<f64>) -> f64 {
    let (t, n) = x.shape();
    let tf = t as f64;
    let s = x.transpose() * x / tf;
    let var: Vec<f64> = (0..n).map(|i| s[(i, i)]).collect();
    let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let rbar = average_correlation(&s, &sd);

    let x2 = x.map(|v| v * v);
    let x3 = x.map(|v| v * v * v);
    let fourth = x2.transpose() * &x2 / tf;
    let third = x3.transpose() * x / tf;
    let mut pi = 0.0;
    let mut pi_diag = 0.0;
    let mut theta_term = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = fourth[(i, j)] - s[(i, j)] * s[(i, j)];
            pi += p;
            if i == j {
                pi_diag += p;
            } else if sd[i] > 0.0 {
                // θ_{ii,ij} = E[(x_i² − s_ii)(x_i x_j − s_ij)]
                let theta = third[(i, j)] - var[i] * s[(i, j)];
                theta_term += sd[j] / sd[i] * theta;
            }
        }
    }
    let rho = pi_diag + rbar * theta_term;
    let target = constant_correlation_target(&s);
    let gamma = (&s - target).norm_squared();
    if gamma <= 0.0 {
        return 0.0;
    }
    ((pi - rho) / gamma / tf).clamp(0.0, 1.0)
}

/// `δF + (1 − δ)S` for a given intensity.
pub fn shrink_with_intensity(sample: &CovarianceEstimate, delta: f64) -> CovarianceEstimate {
    let f = constant_correlation_target(&sample.matrix);
    CovarianceEstimate {
        assets: sample.assets.clone(),
        matrix: f * delta + &sample.matrix * (1.0 - delta),
        estimator: Estimator::LinearShrink,
        intensity: Some(delta),
    }
}

/// Constant-correlation linear shrinkage of the window's sample covariance.
/// The intensity is estimated on the rows where every asset is observed.
pub fn linear_shrinkage(window: &ReturnWindow) -> Result<CovarianceEstimate> {
    let n = window.n_assets();
    if n == 0 {
        return Err(Error::Empty("linear shrinkage over no assets".into()));
    }
    let sample = CovarianceEstimate {
        assets: window.assets.clone(),
        matrix: pairwise_covariance(window)?,
        estimator: Estimator::Sample,
        intensity: None,
    };
    if n == 1 {
        return Ok(shrink_with_intensity(&sample, 0.0));
    }
    let rows = window.complete_rows();
    if rows.len() < 2 {
        return Err(Error::InsufficientHistory(
            "fewer than 2 days with every asset observed".into(),
        ));
    }
    let mut x = DMatrix::from_fn(rows.len(), n, |r, a| window.column(a)[rows[r]]);
    for mut col in x.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    Ok(shrink_with_intensity(&sample, optimal_intensity(&x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::sample_covariance;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_window(seed: u64, n: usize, k: usize) -> ReturnWindow {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let cols = (0..n)
            .map(|_| {
                f.iter()
                    .map(|fv| 0.01 * (fv + { let z: f64 = StandardNormal.sample(&mut rng); z }))
                    .collect()
            })
            .collect();
        ReturnWindow::from_columns((0..n).map(|i| format!("A{i}")).collect(), cols).unwrap()
    }

    #[test]
    fn endpoints() {
        let w = random_window(1, 5, 80);
        let s = sample_covariance(&w).unwrap();
        assert_eq!(shrink_with_intensity(&s, 0.0).matrix, s.matrix);
        let f = constant_correlation_target(&s.matrix);
        assert!((shrink_with_intensity(&s, 1.0).matrix - f).amax() < 1e-18);
    }

    #[test]
    fn intensity_in_unit_interval_and_pd() {
        for seed in 0..10 {
            let c = linear_shrinkage(&random_window(seed, 8, 60)).unwrap();
            let d = c.intensity.unwrap();
            assert!((0.0..=1.0).contains(&d));
            assert!(c.eigen_range().0 > 0.0);
        }
    }

    #[test]
    fn single_asset_is_unchanged() {
        let w = random_window(2, 1, 60);
        let c = linear_shrinkage(&w).unwrap();
        assert_eq!(c.matrix, pairwise_covariance(&w).unwrap());
    }

    #[test]
    fn target_has_constant_correlation() {
        let w = random_window(3, 4, 100);
        let f = constant_correlation_target(&sample_covariance(&w).unwrap().matrix);
        let r = |i: usize, j: usize| f[(i, j)] / (f[(i, i)] * f[(j, j)]).sqrt();
        for (i, j) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            assert!((r(i, j) - r(1, 0)).abs() < 1e-12);
        }
    }
}
