use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Column means and population standard deviations of training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean: Vec<f64> = x.column_iter().map(|c| c.sum() / n).collect();
        let sd = x
            .column_iter()
            .zip(&mean)
            .map(|(c, m)| (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
            .collect();
        Standardizer { mean, sd }
    }

    /// Whether column `j` varies enough to be used.
    pub fn usable(&self, j: usize) -> bool {
        self.sd[j] > 1e-12 * (1.0 + self.mean[j].abs())
    }

    /// Standardized copy; unusable columns become zero.
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            if self.usable(j) {
                (x[(i, j)] - self.mean[j]) / self.sd[j]
            } else {
                0.0
            }
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| if self.usable(j) { (v - self.mean[j]) / self.sd[j] } else { 0.0 })
            .collect()
    }
}

/// `y = intercept + coef · x` on the original feature scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    /// Set when the tiny ridge fallback was used.
    pub ridge: bool,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.nrows(),
            x.row_iter().map(|r| self.predict_row(r.clone_owned().as_slice())),
        )
    }
}

const RIDGE: f64 = 1e-8;

/// Least squares with intercept via QR. A rank-deficient design falls back
/// to a `1e-8` ridge on the centered features when `ridge_fallback` is set
/// and is an error otherwise.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>, ridge_fallback: bool) -> Result<LinearModel> {
    let (n, p) = x.shape();
    if n != y.len() || n == 0 {
        return Err(Error::Dimension(format!("{n} rows, {} targets", y.len())));
    }
    let mut design = DMatrix::from_element(n, p + 1, 1.0);
    design.columns_mut(1, p).copy_from(x);
    if n > p {
        let qr = design.clone().qr();
        let r = qr.r();
        let diag_max = r.diagonal().amax();
        let rank_ok = r.diagonal().iter().all(|d| d.abs() > 1e-10 * diag_max);
        if rank_ok {
            let qty = qr.q().transpose() * y;
            if let Some(beta) = r.solve_upper_triangular(&qty) {
                return Ok(LinearModel {
                    intercept: beta[0],
                    coef: beta.rows(1, p).iter().copied().collect(),
                    ridge: false,
                });
            }
        }
    }
    if !ridge_fallback {
        return Err(Error::RankDeficient(format!("{n} rows, {} columns", p + 1)));
    }
    let nf = n as f64;
    let xm: Vec<f64> = x.column_iter().map(|c| c.sum() / nf).collect();
    let ym = y.sum() / nf;
    let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - xm[j]);
    let yc = y.add_scalar(-ym);
    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += RIDGE * nf;
    }
    let rhs = xc.transpose() * yc;
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("ridge system not positive definite".into()))?
        .solve(&rhs);
    let intercept = ym - beta.iter().zip(&xm).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        intercept,
        coef: beta.iter().copied().collect(),
        ridge: true,
    })
}
