//! Long-only mean-variance allocation with a cash option, equal weights and
//! passive weight drift between rebalance dates.

use nalgebra::{DMatrix, DVector};

use crate::risk::{CovarianceEstimate, MeanEstimate};
use crate::{Error, Result};

/// Portfolio weights on risky assets; the remainder is cash.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub assets: Vec<String>,
    pub w: DVector<f64>,
}

impl Weights {
    pub fn cash(&self) -> f64 {
        1.0 - self.w.sum()
    }

    /// Everything in cash.
    pub fn all_cash() -> Self {
        Weights {
            assets: Vec::new(),
            w: DVector::zeros(0),
        }
    }
}

/// `max w'μ − (γ/2) w'Σw` subject to `w ≥ 0`, `Σw ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub assets: Vec<String>,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub gamma: f64,
}

impl AllocationProblem {
    pub fn new(mean: &MeanEstimate, cov: &CovarianceEstimate, gamma: f64) -> Result<Self> {
        if mean.assets != cov.assets {
            return Err(Error::Dimension("mean and covariance cover different assets".into()));
        }
        Ok(AllocationProblem {
            assets: mean.assets.clone(),
            mu: mean.values.clone(),
            sigma: cov.matrix.clone(),
            gamma,
        })
    }

    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        w.dot(&self.mu) - 0.5 * self.gamma * (w.transpose() * &self.sigma * w)[(0, 0)]
    }

    fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        if self.sigma.shape() != (n, n) || self.assets.len() != n {
            return Err(Error::Dimension(format!(
                "{} assets, μ of length {n}, Σ of shape {:?}",
                self.assets.len(),
                self.sigma.shape()
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Validation(format!("risk aversion must be positive, got {}", self.gamma)));
        }
        if self.mu.iter().chain(self.sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite μ or Σ".into()));
        }
        Ok(())
    }
}

/// Per-constraint violations of the optimality conditions at `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub stationarity: f64,
    pub dual: f64,
    pub complementarity: f64,
    /// Multiplier of the budget constraint.
    pub budget_multiplier: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal
            .max(self.stationarity)
            .max(self.dual)
            .max(self.complementarity)
    }
}

/// Optimality residuals: for each asset either `w_j = 0` and
/// `(μ − γΣw)_j ≤ λ`, or `w_j > 0` and `(μ − γΣw)_j = λ`, with `λ ≥ 0` and
/// `λ(1 − Σw) = 0`.
pub fn kkt_residuals(problem: &AllocationProblem, w: &DVector<f64>) -> KktResiduals {
    let grad = &problem.mu - &problem.sigma * w * problem.gamma;
    let total = w.sum();
    let support: Vec<usize> = (0..w.len()).filter(|&j| w[j] > 0.0).collect();
    let lambda = if !support.is_empty() && (1.0 - total).abs() <= 1e-9 {
        (support.iter().map(|&j| grad[j]).sum::<f64>() / support.len() as f64).max(0.0)
    } else {
        0.0
    };
    let primal = w.iter().map(|v| (-v).max(0.0)).fold(total - 1.0, f64::max).max(0.0);
    let stationarity = support.iter().map(|&j| (grad[j] - lambda).abs()).fold(0.0, f64::max);
    let dual = (0..w.len())
        .filter(|&j| w[j] <= 0.0)
        .map(|j| (grad[j] - lambda).max(0.0))
        .fold(0.0, f64::max);
    KktResiduals {
        primal,
        stationarity,
        dual,
        complementarity: (lambda * (1.0 - total)).abs(),
        budget_multiplier: lambda,
    }
}

const MAX_ITER: usize = 10_000;

/// Primal active-set solver started from the all-cash portfolio.
///
/// The working set holds the bounds `w_j = 0` for non-held assets and,
/// when binding, the budget. Each iteration solves the equality-constrained
/// subproblem on the free assets, steps to the nearest blocking
/// constraint, or releases the constraint with the most negative
/// multiplier. A semidefinite Σ gets a `1e-10·trace/N` ridge first.
pub fn solve_long_only_mv(problem: &AllocationProblem) -> Result<Weights> {
    problem.validate()?;
    let n = problem.mu.len();
    if n == 0 {
        return Ok(Weights::all_cash());
    }
    let asym = crate::risk::asymmetry(&problem.sigma);
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let sigma = (&problem.sigma + problem.sigma.transpose()) * 0.5;
    let scale = (sigma.trace() / n as f64).max(f64::MIN_POSITIVE);
    let min_eig = sigma.clone().symmetric_eigenvalues().min();
    if min_eig < -1e-10 * scale {
        return Err(Error::NotPsd(min_eig));
    }
    let mut q = sigma * problem.gamma;
    if min_eig < 1e-12 * scale {
        log::debug!("semidefinite covariance (min eigenvalue {min_eig:e}); adding ridge");
        for i in 0..n {
            q[(i, i)] += 1e-10 * scale * problem.gamma;
        }
    }
    let c = -&problem.mu;

    let mut x = DVector::zeros(n);
    let mut free = vec![false; n];
    let mut budget = false;
    for _ in 0..MAX_ITER {
        let g = &q * &x + &c;
        let f: Vec<usize> = (0..n).filter(|&j| free[j]).collect();
        let (p_f, lambda_b) = equality_step(&q, &g, &f, budget)?;
        let mut p = DVector::zeros(n);
        for (k, &j) in f.iter().enumerate() {
            p[j] = p_f[k];
        }
        let step_scale = 1e-13 * (1.0 + x.amax());
        if p.amax() <= step_scale {
            // stationary on the working set: check multipliers
            let mut worst: Option<(f64, Option<usize>)> = None;
            if budget && lambda_b < -1e-15 {
                worst = Some((lambda_b, None));
            }
            for j in (0..n).filter(|&j| !free[j]) {
                let lj = g[j] + if budget { lambda_b } else { 0.0 };
                if lj < -1e-15 && worst.is_none_or(|(v, _)| lj < v) {
                    worst = Some((lj, Some(j)));
                }
            }
            match worst {
                None => {
                    return Ok(Weights {
                        assets: problem.assets.clone(),
                        w: x.map(|v| v.max(0.0)),
                    })
                }
                Some((_, Some(j))) => free[j] = true,
                Some((_, None)) => budget = false,
            }
            continue;
        }
        // ratio test against bounds of free assets and the budget
        let mut alpha = 1.0;
        let mut block: Option<Option<usize>> = None;
        for &j in &f {
            if p[j] < 0.0 {
                let a = -x[j] / p[j];
                if a < alpha {
                    alpha = a;
                    block = Some(Some(j));
                }
            }
        }
        let dp = p.sum();
        if !budget && dp > 0.0 {
            let a = (1.0 - x.sum()) / dp;
            if a < alpha {
                alpha = a.max(0.0);
                block = Some(None);
            }
        }
        x += &p * alpha;
        match block {
            Some(Some(j)) => {
                x[j] = 0.0;
                free[j] = false;
            }
            Some(None) => budget = true,
            None => {}
        }
    }
    Err(Error::Solver(format!("active set did not converge in {MAX_ITER} iterations")))
}

/// Solve the working-set subproblem on the free assets. Returns the step
/// and the budget multiplier (zero when the budget is not in the set).
fn equality_step(q: &DMatrix<f64>, g: &DVector<f64>, f: &[usize], budget: bool) -> Result<(DVector<f64>, f64)> {
    let m = f.len();
    if m == 0 {
        return Ok((DVector::zeros(0), 0.0));
    }
    let size = m + usize::from(budget);
    let mut k = DMatrix::zeros(size, size);
    let mut rhs = DVector::zeros(size);
    for (a, &i) in f.iter().enumerate() {
        for (b, &j) in f.iter().enumerate() {
            k[(a, b)] = q[(i, j)];
        }
        rhs[a] = -g[i];
        if budget {
            k[(a, m)] = 1.0;
            k[(m, a)] = 1.0;
        }
    }
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular working-set system".into()))?;
    let lambda = if budget { sol[m] } else { 0.0 };
    Ok((sol.rows(0, m).into_owned(), lambda))
}

/// `1/N` in every asset of the set, no cash.
pub fn equal_weights(assets: &[String]) -> Result<Weights> {
    if assets.is_empty() {
        return Err(Error::Empty("equal weights over an empty set".into()));
    }
    let n = assets.len();
    Ok(Weights {
        assets: assets.to_vec(),
        w: DVector::from_element(n, 1.0 / n as f64),
    })
}

/// Passive weights after one period of returns `r`, cash earning zero:
/// `w_j(1 + r_j) / (Σ_k w_k(1 + r_k) + cash)`.
pub fn drift_weights(w: &Weights, r: &[f64]) -> Result<Weights> {
    if r.len() != w.w.len() {
        return Err(Error::Dimension(format!("{} weights, {} returns", w.w.len(), r.len())));
    }
    if let Some(j) = (0..r.len()).find(|&j| !(1.0 + r[j] > 0.0)) {
        return Err(Error::Validation(format!("gross return of {} is not positive", w.assets[j])));
    }
    let grown: DVector<f64> = DVector::from_iterator(r.len(), (0..r.len()).map(|j| w.w[j] * (1.0 + r[j])));
    let total = grown.sum() + w.cash();
    if !(total > 0.0) {
        return Err(Error::Validation("portfolio value fell to zero".into()));
    }
    Ok(Weights {
        assets: w.assets.clone(),
        w: grown / total,
    })
}
