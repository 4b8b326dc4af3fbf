use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use super::linear::Standardizer;
use crate::seed;
use crate::{Error, Result};

pub const NN_LEARNING_RATES: [f64; 2] = [1e-2, 1e-3];
pub const NN_L2: [f64; 2] = [1e-4, 1e-3];
const HIDDEN: usize = 10;
const MAX_RESTARTS: u32 = 3;

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Two sigmoid hidden layers of ten units and a linear output. Parameters
/// are stored flat: W1, b1, W2, b2, w3, b3.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub n_in: usize,
    pub params: Vec<f64>,
}

struct Offsets {
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

fn offsets(n_in: usize) -> Offsets {
    let b1 = HIDDEN * n_in;
    let w2 = b1 + HIDDEN;
    let b2 = w2 + HIDDEN * HIDDEN;
    let w3 = b2 + HIDDEN;
    let b3 = w3 + HIDDEN;
    Offsets { b1, w2, b2, w3, b3, len: b3 + 1 }
}

/// Activations kept for the backward pass.
struct Trace {
    h1: [f64; HIDDEN],
    h2: [f64; HIDDEN],
    out: f64,
}

impl Mlp {
    pub fn zeros(n_in: usize) -> Self {
        Mlp {
            n_in,
            params: vec![0.0; offsets(n_in).len],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(n_in: usize, rng: &mut impl Rng) -> Self {
        let o = offsets(n_in);
        let mut m = Mlp::zeros(n_in);
        let mut fill = |from: usize, to: usize, fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut m.params[from..to] {
                *v = rng.random_range(-a..a);
            }
        };
        fill(0, o.b1, n_in, HIDDEN);
        fill(o.w2, o.b2, HIDDEN, HIDDEN);
        fill(o.w3, o.b3, HIDDEN, 1);
        m
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let o = offsets(self.n_in);
        let p = &self.params;
        let mut h1 = [0.0; HIDDEN];
        for (k, h) in h1.iter_mut().enumerate() {
            let w = &p[k * self.n_in..(k + 1) * self.n_in];
            *h = sigmoid(p[o.b1 + k] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        }
        let mut h2 = [0.0; HIDDEN];
        for (k, h) in h2.iter_mut().enumerate() {
            let w = &p[o.w2 + k * HIDDEN..o.w2 + (k + 1) * HIDDEN];
            *h = sigmoid(p[o.b2 + k] + w.iter().zip(&h1).map(|(a, b)| a * b).sum::<f64>());
        }
        let out = p[o.b3] + p[o.w3..o.b3].iter().zip(&h2).map(|(a, b)| a * b).sum::<f64>();
        Trace { h1, h2, out }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.trace(x).out
    }

    /// Mean squared error over the rows plus `l2` times the sum of squared
    /// weights (biases unpenalized), with its gradient.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[f64], l2: f64) -> (f64, Vec<f64>) {
        let o = offsets(self.n_in);
        let p = &self.params;
        let mut g = vec![0.0; p.len()];
        let scale = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let t = self.trace(x);
            let err = t.out - y;
            loss += err * err * scale;
            let d_out = 2.0 * err * scale;
            g[o.b3] += d_out;
            let mut d2 = [0.0; HIDDEN];
            for k in 0..HIDDEN {
                g[o.w3 + k] += d_out * t.h2[k];
                d2[k] = d_out * p[o.w3 + k] * t.h2[k] * (1.0 - t.h2[k]);
            }
            let mut d1 = [0.0; HIDDEN];
            for k in 0..HIDDEN {
                g[o.b2 + k] += d2[k];
                for j in 0..HIDDEN {
                    g[o.w2 + k * HIDDEN + j] += d2[k] * t.h1[j];
                    d1[j] += d2[k] * p[o.w2 + k * HIDDEN + j];
                }
            }
            for j in 0..HIDDEN {
                let dj = d1[j] * t.h1[j] * (1.0 - t.h1[j]);
                g[o.b1 + j] += dj;
                for (i, xi) in x.iter().enumerate() {
                    g[j * self.n_in + i] += dj * xi;
                }
            }
        }
        for range in [0..o.b1, o.w2..o.b2, o.w3..o.b3] {
            for i in range {
                loss += l2 * p[i] * p[i];
                g[i] += 2.0 * l2 * p[i];
            }
        }
        (loss, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuralParams {
    pub learning_rate: f64,
    pub l2: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl NeuralParams {
    pub fn new(learning_rate: f64, l2: f64) -> Self {
        NeuralParams {
            learning_rate,
            l2,
            batch: 32,
            max_epochs: 500,
            patience: 25,
        }
    }
}

/// A trained network with the scaling of its inputs and target.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    pub net: Mlp,
    pub standardizer: Standardizer,
    pub y_mean: f64,
    pub y_sd: f64,
    pub params: NeuralParams,
    /// Learning rate actually used after any restarts.
    pub effective_learning_rate: f64,
    pub epochs: usize,
    pub validation_mse: f64,
}

impl NeuralModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.y_mean + self.y_sd * self.net.forward(&self.standardizer.transform_row(x))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(x.nrows(), x.row_iter().map(|r| self.predict_row(r.clone_owned().as_slice())))
    }
}

fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Minibatch SGD with early stopping on validation MSE. A non-finite loss
/// restarts training with half the learning rate, at most three times.
pub fn train_network(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DVector<f64>,
    params: NeuralParams,
    seed_value: u64,
) -> Result<NeuralModel> {
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} rows, {} targets", x.nrows(), y.len())));
    }
    let standardizer = Standardizer::fit(x);
    let z = rows_of(&standardizer.transform(x));
    let n = y.len() as f64;
    let y_mean = y.sum() / n;
    let y_sd = {
        let v = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
        if v > 0.0 { v.sqrt() } else { 1.0 }
    };
    let t: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_sd).collect();
    let zv = rows_of(&standardizer.transform(x_val));
    let val_mse = |net: &Mlp| {
        zv.iter()
            .zip(y_val.iter())
            .map(|(r, yv)| (y_mean + y_sd * net.forward(r) - yv).powi(2))
            .sum::<f64>()
            / zv.len().max(1) as f64
    };

    for attempt in 0..=MAX_RESTARTS {
        let lr = params.learning_rate / 2f64.powi(attempt as i32);
        let mut rng = seed::rng(seed_value, &[attempt as u64]);
        let mut net = Mlp::init(x.ncols(), &mut rng);
        let mut best = (val_mse(&net), net.clone(), 0);
        let mut since = 0;
        let mut order: Vec<usize> = (0..z.len()).collect();
        let mut diverged = false;
        'epochs: for epoch in 1..=params.max_epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch.max(1)) {
                let xs: Vec<&[f64]> = batch.iter().map(|&i| z[i].as_slice()).collect();
                let ys: Vec<f64> = batch.iter().map(|&i| t[i]).collect();
                let (loss, g) = net.loss_and_gradient(&xs, &ys, params.l2);
                if !loss.is_finite() {
                    diverged = true;
                    break 'epochs;
                }
                for (p, gi) in net.params.iter_mut().zip(&g) {
                    *p -= lr * gi;
                }
            }
            let v = val_mse(&net);
            if !v.is_finite() {
                diverged = true;
                break;
            }
            if v < best.0 {
                best = (v, net.clone(), epoch);
                since = 0;
            } else {
                since += 1;
                if since >= params.patience {
                    break;
                }
            }
        }
        if diverged {
            log::warn!("network training diverged at learning rate {lr:e}; restarting");
            continue;
        }
        return Ok(NeuralModel {
            net: best.1,
            standardizer,
            y_mean,
            y_sd,
            params,
            effective_learning_rate: lr,
            epochs: best.2,
            validation_mse: best.0,
        });
    }
    Err(Error::Diverged(format!(
        "loss not finite after {MAX_RESTARTS} restarts from learning rate {}",
        params.learning_rate
    )))
}

/// Train over the learning-rate × penalty grid and keep the configuration
/// with the lowest validation MSE.
pub fn fit_neural_net(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DVector<f64>,
    seed_value: u64,
) -> Result<NeuralModel> {
    let mut best: Option<NeuralModel> = None;
    for (i, lr) in NN_LEARNING_RATES.into_iter().enumerate() {
        for (j, l2) in NN_L2.into_iter().enumerate() {
            let m = train_network(x, y, x_val, y_val, NeuralParams::new(lr, l2), seed::derive(seed_value, &[i as u64, j as u64]))?;
            if best.as_ref().is_none_or(|b| m.validation_mse < b.validation_mse) {
                best = Some(m);
            }
        }
    }
    Ok(best.expect("grid"))
}
