//! Rolling means and covariance estimators over trailing daily windows.
//!
//! Daily moments are scaled by [`HORIZON_DAYS`] to the allocator's monthly
//! horizon. Full-universe estimates are built once per period and cut down
//! to each investor's opportunity set with [`restrict_to_set`].

mod linear;
mod nonlinear;
mod sample;
mod window;

use nalgebra::{DMatrix, DVector};

pub use linear::{linear_shrinkage, shrink_with_intensity};
pub use nonlinear::{nonlinear_shrinkage, BANDWIDTH_EXPONENT};
pub use sample::{rolling_mean, sample_covariance};
pub use window::{ReturnWindow, MIN_VALID_DAYS, WINDOW_MONTHS};

use crate::{Error, Result};

/// Trading days per month used to scale daily moments.
pub const HORIZON_DAYS: f64 = 21.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Estimator {
    Sample,
    LinearShrink,
    NonlinearShrink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimate {
    pub assets: Vec<String>,
    /// Expected monthly returns.
    pub values: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub assets: Vec<String>,
    /// Monthly-scaled covariance.
    pub matrix: DMatrix<f64>,
    pub estimator: Estimator,
    /// Shrinkage intensity for the linear estimator.
    pub intensity: Option<f64>,
}

impl CovarianceEstimate {
    pub fn n(&self) -> usize {
        self.assets.len()
    }

    /// Extreme eigenvalues (min, max).
    pub fn eigen_range(&self) -> (f64, f64) {
        let e = self.matrix.clone().symmetric_eigenvalues();
        (e.min(), e.max())
    }
}

/// Largest absolute asymmetry relative to the largest entry.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() / scale
}

/// Principal submatrix and subvector for `set`, in `set` order.
pub fn restrict_to_set(
    mean: &MeanEstimate,
    cov: &CovarianceEstimate,
    set: &[String],
) -> Result<(MeanEstimate, CovarianceEstimate)> {
    let index = |assets: &[String], id: &String| {
        assets
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Error::UnknownAsset(id.clone()))
    };
    let mi: Vec<usize> = set.iter().map(|a| index(&mean.assets, a)).collect::<Result<_>>()?;
    let ci: Vec<usize> = set.iter().map(|a| index(&cov.assets, a)).collect::<Result<_>>()?;
    let n = set.len();
    Ok((
        MeanEstimate {
            assets: set.to_vec(),
            values: DVector::from_fn(n, |i, _| mean.values[mi[i]]),
        },
        CovarianceEstimate {
            assets: set.to_vec(),
            matrix: DMatrix::from_fn(n, n, |i, j| cov.matrix[(ci[i], ci[j])]),
            estimator: cov.estimator,
            intensity: cov.intensity,
        },
    ))
}
