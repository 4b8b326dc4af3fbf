use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{asymmetry, CovarianceEstimate, Estimator};
use crate::{Error, Result};

/// Kernel bandwidth is `n^(-1/3)` times each sample eigenvalue.
pub const BANDWIDTH_EXPONENT: f64 = -1.0 / 3.0;

/// Relative asymmetry tolerated in the input.
const SYMMETRY_TOL: f64 = 1e-10;

/// Analytical nonlinear shrinkage of a sample covariance estimated from
/// `k` observations.
///
/// The sample eigenvalues are replaced by the asymptotically optimal
/// values computed from an Epanechnikov kernel estimate of the spectral
/// density and its Hilbert transform; eigenvectors are kept. When there are
/// more assets than degrees of freedom the null eigenvalues share a single
/// shrunk value. The result is rescaled to the trace of the input.
pub fn nonlinear_shrinkage(sample: &CovarianceEstimate, k: usize) -> Result<CovarianceEstimate> {
    let p = sample.n();
    if p == 0 {
        return Err(Error::Empty("nonlinear shrinkage of an empty matrix".into()));
    }
    let asym = asymmetry(&sample.matrix);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if p == 1 {
        return Ok(CovarianceEstimate {
            estimator: Estimator::NonlinearShrink,
            intensity: None,
            ..sample.clone()
        });
    }
    if k < 2 {
        return Err(Error::InsufficientHistory(format!("{k} observations")));
    }
    let n = k - 1;
    let sym = (&sample.matrix + sample.matrix.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let u = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, order[c])]);
    let all: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if all[p - 1] <= 0.0 {
        return Ok(CovarianceEstimate {
            estimator: Estimator::NonlinearShrink,
            intensity: None,
            ..sample.clone()
        });
    }

    let m = p.min(n);
    let lambda: Vec<f64> = all[p - m..].iter().map(|v| v.max(all[p - 1] * 1e-14)).collect();
    let h = (n as f64).powf(BANDWIDTH_EXPONENT);
    let c = p as f64 / n as f64;
    let sqrt5 = 5f64.sqrt();
    let mut f = vec![0.0; m];
    let mut hf = vec![0.0; m];
    for i in 0..m {
        let (mut fs, mut hs) = (0.0, 0.0);
        for &lj in &lambda {
            let bw = h * lj;
            let x = (lambda[i] - lj) / bw;
            fs += (1.0 - x * x / 5.0).max(0.0) / bw;
            let ht = if (x.abs() - sqrt5).abs() < 1e-12 {
                -3.0 / 10.0 / PI * x
            } else {
                -3.0 / 10.0 / PI * x
                    + 3.0 / 4.0 / sqrt5 / PI * (1.0 - x * x / 5.0) * ((sqrt5 - x) / (sqrt5 + x)).abs().ln()
            };
            hs += ht / bw;
        }
        f[i] = 3.0 / 4.0 / sqrt5 * fs / m as f64;
        hf[i] = hs / m as f64;
    }

    let mut shrunk = Vec::with_capacity(p);
    if p <= n {
        for i in 0..m {
            let l = lambda[i];
            let a = PI * c * l * f[i];
            let b = 1.0 - c - PI * c * l * hf[i];
            shrunk.push(l / (a * a + b * b));
        }
    } else {
        if (5f64.sqrt() * h) >= 1.0 {
            return Err(Error::InsufficientHistory(format!(
                "{k} observations are too few for {p} assets"
            )));
        }
        let mean_inv = lambda.iter().map(|l| 1.0 / l).sum::<f64>() / m as f64;
        let hf0 = (1.0 / PI)
            * (3.0 / 10.0 / (h * h)
                + 3.0 / 4.0 / sqrt5 / h * (1.0 - 1.0 / 5.0 / (h * h)) * ((1.0 + sqrt5 * h) / (1.0 - sqrt5 * h)).ln())
            * mean_inv;
        let d0 = 1.0 / (PI * (p - n) as f64 / n as f64 * hf0);
        shrunk.extend(std::iter::repeat_n(d0, p - n));
        for i in 0..m {
            let l = lambda[i];
            shrunk.push(l / (PI * PI * l * l * (f[i] * f[i] + hf[i] * hf[i])));
        }
    }

    let floor = all[p - 1] * 1e-12;
    let mut d = DVector::from_iterator(p, shrunk.into_iter().map(|v| if v.is_finite() { v.max(floor) } else { floor }));
    let trace = sample.matrix.trace();
    d *= trace / d.sum();
    let out = &u * DMatrix::from_diagonal(&d) * u.transpose();
    Ok(CovarianceEstimate {
        assets: sample.assets.clone(),
        matrix: (&out + out.transpose()) * 0.5,
        estimator: Estimator::NonlinearShrink,
        intensity: None,
    })
}
