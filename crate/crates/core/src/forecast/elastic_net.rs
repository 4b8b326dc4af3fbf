use nalgebra::{DMatrix, DVector};

use super::linear::{LinearModel, Standardizer};
use super::selection::mse;
use crate::{Error, Result};

pub const EN_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const EN_LAMBDA_POINTS: usize = 50;
/// Smallest grid λ relative to λ_max.
pub const EN_LAMBDA_RATIO: f64 = 1e-4;

const MAX_SWEEPS: usize = 200_000;
const TOL: f64 = 1e-13;

/// Elastic net fit. The penalty acts on coefficients of standardized
/// features: `MSE + αλ Σ|b| + ½(1 − α)λ Σ b²`, intercept unpenalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticNetModel {
    /// Coefficients on the original feature scale.
    pub model: LinearModel,
    /// Coefficients on the standardized scale.
    pub std_coef: Vec<f64>,
    pub standardizer: Standardizer,
    pub alpha: f64,
    pub lambda: f64,
    pub validation_mse: Option<f64>,
}

impl ElasticNetModel {
    /// Penalized training objective of `model` on `(x, y)`, with the
    /// penalty measured on the standardized scale of this fit.
    pub fn objective(&self, x: &DMatrix<f64>, y: &DVector<f64>, model: &LinearModel) -> f64 {
        let fit = mse(&model.predict(x), y);
        let b: Vec<f64> = model.coef.iter().zip(&self.standardizer.sd).map(|(c, s)| c * s).collect();
        let l1: f64 = b.iter().map(|v| v.abs()).sum();
        let l2: f64 = b.iter().map(|v| v * v).sum();
        fit + self.alpha * self.lambda * l1 + 0.5 * (1.0 - self.alpha) * self.lambda * l2
    }
}

/// Gram form of the standardized training problem.
struct Prepared {
    std: Standardizer,
    gram: DMatrix<f64>,
    c: DVector<f64>,
    y_mean: f64,
    usable: Vec<bool>,
}

impl Prepared {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || n != y.len() {
            return Err(Error::Dimension(format!("{n} rows, {} targets", y.len())));
        }
        let std = Standardizer::fit(x);
        let usable: Vec<bool> = (0..x.ncols()).map(|j| std.usable(j)).collect();
        for (j, ok) in usable.iter().enumerate() {
            if !ok {
                log::warn!("elastic net: feature {j} has zero variance and is dropped");
            }
        }
        let z = std.transform(x);
        let y_mean = y.sum() / n as f64;
        let yc = y.add_scalar(-y_mean);
        Ok(Prepared {
            gram: z.transpose() * &z / n as f64,
            c: z.transpose() * yc / n as f64,
            std,
            y_mean,
            usable,
        })
    }

    fn lambda_max(&self) -> f64 {
        2.0 * self.c.amax()
    }

    /// Coordinate descent from the warm start `b`.
    fn solve(&self, alpha: f64, lambda: f64, b: &mut [f64]) {
        let p = b.len();
        let thresh = alpha * lambda / 2.0;
        let ridge = (1.0 - alpha) * lambda / 2.0;
        for _ in 0..MAX_SWEEPS {
            let mut delta = 0.0f64;
            let mut size = 1.0f64;
            for j in 0..p {
                if !self.usable[j] {
                    b[j] = 0.0;
                    continue;
                }
                let mut rho = self.c[j];
                for k in 0..p {
                    if k != j {
                        rho -= self.gram[(j, k)] * b[k];
                    }
                }
                let next = soft_threshold(rho, thresh) / (self.gram[(j, j)] + ridge);
                delta = delta.max((next - b[j]).abs());
                size = size.max(next.abs());
                b[j] = next;
            }
            if delta <= TOL * size {
                return;
            }
        }
        log::warn!("elastic net coordinate descent hit the sweep limit at α={alpha}, λ={lambda:e}");
    }

    fn model(&self, b: &[f64], alpha: f64, lambda: f64) -> ElasticNetModel {
        let coef: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(j, v)| if self.usable[j] { v / self.std.sd[j] } else { 0.0 })
            .collect();
        let intercept = self.y_mean - coef.iter().zip(&self.std.mean).map(|(c, m)| c * m).sum::<f64>();
        ElasticNetModel {
            model: LinearModel {
                intercept,
                coef,
                ridge: false,
            },
            std_coef: b.to_vec(),
            standardizer: self.std.clone(),
            alpha,
            lambda,
            validation_mse: None,
        }
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Smallest λ at which the lasso (α = 1) zeroes every coefficient.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    Ok(Prepared::new(x, y)?.lambda_max())
}

/// Descending log-spaced grid from `lmax` to `lmax · 1e-4`.
pub fn lambda_grid(lmax: f64) -> Vec<f64> {
    let k = EN_LAMBDA_POINTS - 1;
    (0..EN_LAMBDA_POINTS)
        .map(|i| lmax * EN_LAMBDA_RATIO.powf(i as f64 / k as f64))
        .collect()
}

/// Fit at one (α, λ).
pub fn fit_elastic_net_fixed(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, lambda: f64) -> Result<ElasticNetModel> {
    if !(0.0..=1.0).contains(&alpha) || lambda < 0.0 {
        return Err(Error::Validation(format!("bad elastic net tuning α={alpha}, λ={lambda}")));
    }
    let prep = Prepared::new(x, y)?;
    let mut b = vec![0.0; x.ncols()];
    prep.solve(alpha, lambda, &mut b);
    Ok(prep.model(&b, alpha, lambda))
}

/// Fit on training rows over the (α, λ) grid and keep the pair with the
/// lowest validation MSE. Each α walks λ downward with warm starts.
pub fn fit_elastic_net(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DVector<f64>,
) -> Result<ElasticNetModel> {
    let prep = Prepared::new(x, y)?;
    let lmax = prep.lambda_max();
    let grid = if lmax > 0.0 { lambda_grid(lmax) } else { vec![0.0] };
    let mut best: Option<(f64, ElasticNetModel)> = None;
    for alpha in EN_ALPHAS {
        let mut b = vec![0.0; x.ncols()];
        for &lambda in &grid {
            prep.solve(alpha, lambda, &mut b);
            let m = prep.model(&b, alpha, lambda);
            let v = mse(&m.model.predict(x_val), y_val);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, m));
            }
        }
    }
    let (v, mut m) = best.expect("nonempty grid");
    m.validation_mse = Some(v);
    Ok(m)
}
