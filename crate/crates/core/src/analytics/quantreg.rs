//! Linear quantile regression.
//!
//! The pinball-loss problem is solved through its bounded dual
//! `max y'a  s.t. X'a = (1 − τ)X'1, 0 ≤ a ≤ 1` with a Mehrotra-style
//! primal-dual interior point method; the coefficients are minus the
//! equality multipliers. The interior solution is then snapped to the
//! nearest basic solution (p zero residuals) when that does not raise the
//! loss. A subgradient descent takes over if the interior point iteration
//! breaks down.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapSpec;
use crate::fsio::{create, csv_err};
use crate::numfmt::fmt12;
use crate::{seed, Error, Result};

const MAX_ITER: usize = 100;
const STEP_BACK: f64 = 0.99995;

/// `ρ_τ(u) = u (τ − 1{u < 0})`.
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        (tau - 1.0) * u
    } else {
        tau * u
    }
}

pub fn pinball_loss(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, tau: f64) -> f64 {
    (y - x * beta).iter().map(|u| pinball(*u, tau)).sum()
}

/// Rejects designs where a column is (numerically) a linear combination
/// of the earlier ones, naming that column and the ones it loads on.
pub fn check_collinearity(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    if names.len() != x.ncols() {
        return Err(Error::Dimension(format!("{} names for {} columns", names.len(), x.ncols())));
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::Collinear(vec![names[j].clone()]));
        }
        let mut r = col.clone();
        // twice for numerical orthogonality
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn <= 1e-9 * norm {
            let loads: Vec<String> = kept
                .iter()
                .zip(&basis)
                .filter(|(_, q)| q.dot(&col).abs() > 1e-9 * norm)
                .map(|(k, _)| names[*k].clone())
                .collect();
            let mut cols = loads;
            cols.push(names[j].clone());
            return Err(Error::Collinear(cols));
        }
        basis.push(r / rn);
        kept.push(j);
    }
    Ok(())
}

/// Fraction of the step `d` that keeps `v + f·d` nonnegative.
fn max_step(v: &DVector<f64>, d: &DVector<f64>) -> f64 {
    v.iter()
        .zip(d.iter())
        .filter(|(_, di)| **di < 0.0)
        .map(|(vi, di)| -vi / di)
        .fold(f64::INFINITY, f64::min)
}

fn solve_spd(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = m.diagonal().max().max(1e-300);
    let mut m = m;
    for attempt in 0..4 {
        if let Some(ch) = m.clone().cholesky() {
            let s = ch.solve(rhs);
            if s.iter().all(|v| v.is_finite()) {
                return Some(s);
            }
        }
        let ridge = scale * 1e-12 * 100f64.powi(attempt);
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
    }
    None
}

fn interior_point(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> Option<DVector<f64>> {
    let n = x.nrows();
    let c = -y;
    let b = x.tr_mul(&DVector::from_element(n, 1.0 - tau));
    let mut xs = DVector::from_element(n, 1.0 - tau);
    let mut s = DVector::from_element(n, tau);
    let mut yd = solve_spd(x.tr_mul(x), &x.tr_mul(&c))?;
    let r = &c - x * &yd;
    let delta = 1e-3 * (1.0 + r.amax());
    let mut z = r.map(|v| v.max(0.0) + delta);
    let mut w = r.map(|v| (-v).max(0.0) + delta);
    let scale = 1.0 + y.amax() * n as f64;

    for _ in 0..MAX_ITER {
        let gap = z.dot(&xs) + w.dot(&s);
        if gap < 1e-13 * scale {
            break;
        }
        let q = DVector::from_iterator(n, (0..n).map(|i| 1.0 / (z[i] / xs[i] + w[i] / s[i])));
        let rd = &c - x * &yd - &z + &w;
        let rp = &b - x.tr_mul(&xs);
        let mut xq = x.clone();
        for (i, mut row) in xq.row_iter_mut().enumerate() {
            row *= q[i];
        }
        let m = x.tr_mul(&xq);

        // Newton step towards complementarity `mu`, with second-order
        // corrections subtracted from the complementarity residuals.
        let direction = |mu: f64, corr_xz: &DVector<f64>, corr_sw: &DVector<f64>| {
            let rxz = DVector::from_iterator(n, (0..n).map(|i| mu - xs[i] * z[i] - corr_xz[i]));
            let rsw = DVector::from_iterator(n, (0..n).map(|i| mu - s[i] * w[i] - corr_sw[i]));
            let rhat = DVector::from_iterator(n, (0..n).map(|i| rd[i] - rxz[i] / xs[i] + rsw[i] / s[i]));
            let qr = rhat.component_mul(&q);
            let rhs = &rp + x.tr_mul(&qr);
            let dy = solve_spd(m.clone(), &rhs)?;
            let xdy = x * &dy;
            let dx = DVector::from_iterator(n, (0..n).map(|i| q[i] * (xdy[i] - rhat[i])));
            let dz = DVector::from_iterator(n, (0..n).map(|i| (rxz[i] - z[i] * dx[i]) / xs[i]));
            let dw = DVector::from_iterator(n, (0..n).map(|i| (rsw[i] + w[i] * dx[i]) / s[i]));
            Some((dx, dy, dz, dw))
        };
        let zeros = DVector::zeros(n);
        let (dx, _, dz, dw) = direction(0.0, &zeros, &zeros)?;
        let ds = -&dx;
        let fp = max_step(&xs, &dx).min(max_step(&s, &ds)).min(1.0);
        let fd = max_step(&z, &dz).min(max_step(&w, &dw)).min(1.0);
        let g = (&z + fd * &dz).dot(&(&xs + fp * &dx)) + (&w + fd * &dw).dot(&(&s + fp * &ds));
        let sigma = (g / gap).clamp(0.0, 1.0).powi(3);
        let mu = sigma * gap / (2 * n) as f64;
        let cxz = dx.component_mul(&dz);
        let csw = ds.component_mul(&dw);
        let (dx, dy, dz, dw) = direction(mu, &cxz, &csw)?;
        let ds = -&dx;
        let fp = (STEP_BACK * max_step(&xs, &dx).min(max_step(&s, &ds))).min(1.0);
        let fd = (STEP_BACK * max_step(&z, &dz).min(max_step(&w, &dw))).min(1.0);
        xs += fp * &dx;
        s += fp * &ds;
        yd += fd * &dy;
        z += fd * &dz;
        w += fd * &dw;
        if !(yd.iter().all(|v| v.is_finite()) && xs.iter().all(|v| v.is_finite())) {
            return None;
        }
    }
    Some(-yd)
}

/// Snap to the basic solution interpolating the p observations with the
/// smallest absolute residuals, if that is no worse.
fn vertex_polish(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64, beta: DVector<f64>) -> DVector<f64> {
    let (n, p) = x.shape();
    let res = y - x * &beta;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|a, b| res[*a].abs().total_cmp(&res[*b].abs()).then(a.cmp(b)));
    let sub = DMatrix::from_fn(p, p, |i, j| x[(idx[i], j)]);
    let rhs = DVector::from_fn(p, |i, _| y[idx[i]]);
    let Some(cand) = sub.lu().solve(&rhs) else { return beta };
    if !cand.iter().all(|v| v.is_finite()) {
        return beta;
    }
    let (l0, l1) = (pinball_loss(x, y, &beta, tau), pinball_loss(x, y, &cand, tau));
    if l1 <= l0 + 1e-12 * (1.0 + l0.abs()) {
        cand
    } else {
        beta
    }
}

fn subgradient(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> DVector<f64> {
    let (n, p) = x.shape();
    let mut beta = x.clone().svd(true, true).solve(y, 1e-12).unwrap_or_else(|_| DVector::zeros(p));
    let mut best = beta.clone();
    let mut best_loss = pinball_loss(x, y, &beta, tau);
    let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for k in 1..=20_000 {
        let res = y - x * &beta;
        let g = DVector::from_iterator(n, res.iter().map(|u| if *u < 0.0 { 1.0 - tau } else { -tau }));
        let grad = x.tr_mul(&g);
        let gn = grad.norm();
        if gn == 0.0 {
            break;
        }
        beta -= grad * (best_loss.max(1e-12) / (scale * gn * (k as f64).sqrt()));
        let loss = pinball_loss(x, y, &beta, tau);
        if loss < best_loss {
            best_loss = loss;
            best = beta.clone();
        }
    }
    best
}

/// Minimizer of `Σ ρ_τ(y − Xβ)`. `x` must already contain any intercept.
pub fn fit_quantile(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Validation(format!("quantile level {tau} outside (0, 1)")));
    }
    if y.len() != n {
        return Err(Error::Dimension(format!("{} responses for {n} rows", y.len())));
    }
    if n < p || p == 0 {
        return Err(Error::Validation(format!("{n} observations for {p} covariates")));
    }
    let beta = match interior_point(x, y, tau) {
        Some(b) if b.iter().all(|v| v.is_finite()) => b,
        _ => {
            log::warn!("interior point failed at tau {tau}; using subgradient descent");
            subgradient(x, y, tau)
        }
    };
    Ok(vertex_polish(x, y, tau, beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantileRegSpec {
    pub taus: Vec<f64>,
    pub bootstrap: BootstrapSpec,
}

impl Default for QuantileRegSpec {
    fn default() -> Self {
        QuantileRegSpec {
            taus: vec![0.05, 0.1, 0.2, 0.5, 0.8, 0.9, 0.95],
            bootstrap: BootstrapSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantRegRow {
    pub tau: f64,
    pub covariate: String,
    pub coefficient: f64,
    pub p_value: f64,
    pub stars: &'static str,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Quantile regressions of `y` on an intercept plus the columns of
/// `covariates`, one block of rows per τ. P-values are two-sided
/// bootstrap percentile p-values from resampling investors (rows).
pub fn quantile_regression(
    y: &[f64],
    covariates: &DMatrix<f64>,
    names: &[String],
    spec: &QuantileRegSpec,
) -> Result<Vec<QuantRegRow>> {
    let n = y.len();
    let k = covariates.ncols();
    if covariates.nrows() != n {
        return Err(Error::Dimension(format!("{} covariate rows for {n} responses", covariates.nrows())));
    }
    if n <= 10 * k.max(1) {
        return Err(Error::Validation(format!("{n} observations is too few for {k} covariates")));
    }
    spec.bootstrap.validate()?;
    let mut x = DMatrix::from_element(n, k + 1, 1.0);
    x.view_mut((0, 1), (n, k)).copy_from(covariates);
    let mut all_names = vec!["intercept".to_string()];
    all_names.extend(names.iter().cloned());
    check_collinearity(&x, &all_names)?;
    let yv = DVector::from_column_slice(y);

    let mut rows = Vec::new();
    for (ti, &tau) in spec.taus.iter().enumerate() {
        let beta = fit_quantile(&x, &yv, tau)?;
        let draws: Vec<Option<DVector<f64>>> = (0..spec.bootstrap.reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = seed::rng(spec.bootstrap.seed, &[ti as u64, r as u64]);
                let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let xb = x.select_rows(&pick);
                let yb = DVector::from_iterator(n, pick.iter().map(|i| yv[*i]));
                if check_collinearity(&xb, &all_names).is_err() {
                    return None;
                }
                fit_quantile(&xb, &yb, tau).ok()
            })
            .collect();
        let draws: Vec<DVector<f64>> = draws.into_iter().flatten().collect();
        if draws.is_empty() {
            return Err(Error::Solver(format!("no usable bootstrap replicate at tau {tau}")));
        }
        for (j, name) in all_names.iter().enumerate() {
            let le = draws.iter().filter(|d| d[j] <= 0.0).count() as f64;
            let ge = draws.iter().filter(|d| d[j] >= 0.0).count() as f64;
            let p = (2.0 * le.min(ge) / draws.len() as f64).min(1.0);
            rows.push(QuantRegRow {
                tau,
                covariate: name.clone(),
                coefficient: beta[j],
                p_value: p,
                stars: stars(p),
            });
        }
    }
    Ok(rows)
}

pub fn write_quantreg(rows: &[QuantRegRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["tau", "covariate", "coefficient", "p_value", "stars"]).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([fmt12(r.tau), r.covariate.clone(), fmt12(r.coefficient), fmt12(r.p_value), r.stars.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
