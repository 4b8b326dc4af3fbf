use nalgebra::{DMatrix, DVector};

use super::{CovarianceEstimate, Estimator, MeanEstimate, ReturnWindow, HORIZON_DAYS};
use crate::{Error, Result};

/// Minimum pairwise-complete observations for a covariance entry.
const MIN_PAIR_OBS: usize = 30;

/// Mean daily return per asset over its valid window days, times 21.
pub fn rolling_mean(window: &ReturnWindow) -> Result<MeanEstimate> {
    if window.n_days() == 0 || window.n_assets() == 0 {
        return Err(Error::Empty("rolling mean over an empty window".into()));
    }
    let values = DVector::from_iterator(
        window.n_assets(),
        (0..window.n_assets()).map(|a| {
            let (s, n) = window
                .column(a)
                .iter()
                .filter(|r| !r.is_nan())
                .fold((0.0, 0usize), |(s, n), r| (s + r, n + 1));
            HORIZON_DAYS * s / n as f64
        }),
    );
    Ok(MeanEstimate {
        assets: window.assets.clone(),
        values,
    })
}

/// Unbiased covariance over pairwise-complete days, times 21.
///
/// With missing data the pairwise matrix can fail to be PSD; negative
/// eigenvalues are then clipped to zero.
pub fn sample_covariance(window: &ReturnWindow) -> Result<CovarianceEstimate> {
    let n = window.n_assets();
    if n < 2 {
        return Err(Error::Dimension(format!("sample covariance needs at least 2 assets, got {n}")));
    }
    Ok(CovarianceEstimate {
        assets: window.assets.clone(),
        matrix: pairwise_covariance(window)?,
        estimator: Estimator::Sample,
        intensity: None,
    })
}

pub(super) fn pairwise_covariance(window: &ReturnWindow) -> Result<DMatrix<f64>> {
    let n = window.n_assets();
    let mut m = DMatrix::zeros(n, n);
    let mut any_missing = false;
    for i in 0..n {
        for j in 0..=i {
            let (x, y) = (window.column(i), window.column(j));
            let pairs: Vec<(f64, f64)> = x
                .iter()
                .zip(y)
                .filter(|(a, b)| !a.is_nan() && !b.is_nan())
                .map(|(a, b)| (*a, *b))
                .collect();
            if pairs.len() < MIN_PAIR_OBS {
                return Err(Error::InsufficientHistory(format!(
                    "{} and {} share only {} days",
                    window.assets[i],
                    window.assets[j],
                    pairs.len()
                )));
            }
            any_missing |= pairs.len() < window.n_days();
            let k = pairs.len() as f64;
            let mx = pairs.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pairs.iter().map(|p| p.1).sum::<f64>() / k;
            let c = pairs.iter().map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (k - 1.0);
            m[(i, j)] = HORIZON_DAYS * c;
            m[(j, i)] = m[(i, j)];
        }
    }
    if any_missing {
        let eig = m.clone().symmetric_eigen();
        if eig.eigenvalues.min() < 0.0 {
            log::debug!("pairwise covariance not PSD; clipping eigenvalues");
            let d = eig.eigenvalues.map(|v| v.max(0.0));
            m = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
            m = (&m + m.transpose()) * 0.5;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn win(cols: Vec<Vec<f64>>) -> ReturnWindow {
        let names = (0..cols.len()).map(|i| format!("A{i}")).collect();
        ReturnWindow::from_columns(names, cols).unwrap()
    }

    #[test]
    fn constant_return_mean() {
        let m = rolling_mean(&win(vec![vec![0.002; 100]])).unwrap();
        assert!((m.values[0] - 21.0 * 0.002).abs() < 1e-15);
    }

    #[test]
    fn alternating_mean_is_zero() {
        let col: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        assert_eq!(rolling_mean(&win(vec![col])).unwrap().values[0], 0.0);
    }

    #[test]
    fn mean_matches_scalar_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let col: Vec<f64> = (0..500).map(|_| 0.01 * { let z: f64 = StandardNormal.sample(&mut rng); z }).collect();
        let mut s = 0.0;
        for r in &col {
            s += r;
        }
        let m = rolling_mean(&win(vec![col])).unwrap();
        assert!((m.values[0] - 21.0 * s / 500.0).abs() < 1e-14);
    }

    #[test]
    fn perfectly_correlated_pair() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let c = sample_covariance(&win(vec![x, y])).unwrap().matrix;
        assert!((c[(0, 1)] - (c[(0, 0)] * c[(1, 1)]).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn repeated_observation_gives_zero() {
        let c = sample_covariance(&win(vec![vec![0.01; 50], vec![-0.02; 50]])).unwrap();
        assert!(c.matrix.amax() < 1e-30);
    }

    #[test]
    fn independent_series_are_uncorrelated() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let k = 50_000;
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let c = sample_covariance(&win(cols)).unwrap().matrix / HORIZON_DAYS;
        // standard error of a unit-variance covariance estimate is 1/sqrt(k)
        let se = 1.0 / (k as f64).sqrt();
        for i in 0..3 {
            for j in 0..i {
                assert!(c[(i, j)].abs() < 3.0 * se, "{}", c[(i, j)]);
            }
        }
    }

    #[test]
    fn single_asset_is_an_error() {
        assert!(sample_covariance(&win(vec![vec![0.0; 40]])).is_err());
    }

    #[test]
    fn missing_cells_keep_psd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut cols: Vec<Vec<f64>> = (0..4).map(|_| (0..120).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        for (a, col) in cols.iter_mut().enumerate() {
            for d in (a * 20)..(a * 20 + 30) {
                col[d] = f64::NAN;
            }
        }
        let c = sample_covariance(&win(cols)).unwrap();
        assert!(c.eigen_range().0 >= -1e-12);
    }
}
