//! Sparse logistic probe: L1-penalized logistic regression fitted by
//! accelerated proximal gradient with backtracking and monotone restarts.
//!
//! The objective is the sum-form negative log-likelihood plus `lambda * |w|_1`;
//! the intercept is not penalized.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub max_iter: usize,
    /// Relative objective change (and scaled stationarity) at which to stop.
    pub tol: f64,
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_iter: 20_000,
            tol: 1e-7,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// A fitted probe. Weights act on z-scored features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub n_iterations_used: usize,
    pub feature_len: usize,
}

/// Objective values of accepted iterates, plus solver bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub objectives: Vec<f64>,
    pub restarts: usize,
    pub converged: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Proximal operator of `tau * |.|`.
pub fn soft_threshold(z: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    z.signum() * (z.abs() - tau).max(0.0)
}

fn check_labels(y: &[u8]) -> Result<()> {
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Validation(format!("labels must be 0 or 1, found {bad}")));
    }
    Ok(())
}

fn check_design(x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} feature rows but {} labels", x.nrows(), y.len())));
    }
    check_labels(y)
}

/// Negative log-likelihood of `(w, b)` on `(x, y)` plus `lambda * |w|_1`.
pub fn objective(w: ArrayView1<f64>, b: f64, x: ArrayView2<f64>, y: &[u8], lambda: f64) -> Result<f64> {
    check_design(x, y)?;
    if w.len() != x.ncols() {
        return Err(Error::Dimension(format!("{} weights for {} features", w.len(), x.ncols())));
    }
    let z = x.dot(&w);
    let nll: f64 = z.iter().zip(y).map(|(&zi, &yi)| log_loss(zi + b, yi)).sum();
    Ok(nll + lambda * w.iter().map(|v| v.abs()).sum::<f64>())
}

#[inline]
fn log_loss(z: f64, y: u8) -> f64 {
    softplus(z) - if y == 1 { z } else { 0.0 }
}

/// Per-column z-scoring statistics.
struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
    active: Vec<bool>,
}

impl Standardizer {
    fn fit(x: ArrayView2<f64>, enabled: bool) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        let mut active = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let first = col.first().copied().unwrap_or(0.0);
            let constant = col.iter().all(|&v| v == first);
            active.push(!constant);
            if !enabled {
                means.push(0.0);
                stds.push(1.0);
                continue;
            }
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            means.push(mean);
            stds.push(if constant || sd == 0.0 { 1.0 } else { sd });
        }
        Self { means, stds, active }
    }

    fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            if self.active[j] {
                let (m, s) = (self.means[j], self.stds[j]);
                col.mapv_inplace(|v| (v - m) / s);
            } else {
                col.fill(0.0);
            }
        }
        out
    }
}

/// Smooth part of the objective and its gradient.
struct LogisticLoss<'a> {
    x: &'a Array2<f64>,
    y: Array1<f64>,
}

impl LogisticLoss<'_> {
    fn value(&self, w: &Array1<f64>, b: f64) -> f64 {
        let z = self.x.dot(w);
        z.iter()
            .zip(self.y.iter())
            .map(|(&zi, &yi)| softplus(zi + b) - yi * (zi + b))
            .sum()
    }

    fn value_grad(&self, w: &Array1<f64>, b: f64) -> (f64, Array1<f64>, f64) {
        let z = self.x.dot(w);
        let mut value = 0.0;
        let mut resid = Array1::zeros(z.len());
        for i in 0..z.len() {
            let zi = z[i] + b;
            value += softplus(zi) - self.y[i] * zi;
            resid[i] = sigmoid(zi) - self.y[i];
        }
        let gw = self.x.t().dot(&resid);
        (value, gw, resid.sum())
    }
}

fn l1(w: &Array1<f64>) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

/// Largest violation of the lasso optimality conditions at `(w, b)`.
fn stationarity(loss: &LogisticLoss, w: &Array1<f64>, b: f64, lambda: f64) -> f64 {
    let (_, gw, gb) = loss.value_grad(w, b);
    let mut worst = gb.abs();
    for (&wj, &gj) in w.iter().zip(gw.iter()) {
        let r = if wj != 0.0 {
            (gj + lambda * wj.signum()).abs()
        } else {
            (gj.abs() - lambda).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}

/// Fits the probe; see [`train_with_trace`].
pub fn train(x: ArrayView2<f64>, y: &[u8], cfg: &TrainConfig) -> Result<ProbeModel> {
    train_with_trace(x, y, cfg).map(|(m, _)| m)
}

/// Fits the probe from `w = 0, b = 0` and also returns the objective trace.
///
/// Stops once the relative objective decrease of an accepted step is below
/// `tol` and the optimality residual is below `tol * max(N, 1)`, or after
/// `max_iter` iterations.
pub fn train_with_trace(x: ArrayView2<f64>, y: &[u8], cfg: &TrainConfig) -> Result<(ProbeModel, TrainTrace)> {
    cfg.validate()?;
    check_design(x, y)?;
    if y.len() < 2 || y.iter().all(|&v| v == y[0]) {
        return Err(Error::DegenerateLabels);
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        let (i, j) = (pos / x.ncols().max(1), pos % x.ncols().max(1));
        return Err(Error::Validation(format!("feature ({i}, {j}) is not finite")));
    }

    let scaler = Standardizer::fit(x, cfg.standardize);
    let xs = scaler.transform(x);
    let n = xs.nrows();
    let d = xs.ncols();
    let loss = LogisticLoss {
        x: &xs,
        y: y.iter().map(|&v| f64::from(v)).collect(),
    };
    let lambda = cfg.lambda;
    let kkt_tol = cfg.tol * (n as f64).max(1.0);

    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut obj = loss.value(&w, b) + lambda * l1(&w);
    let mut yw = w.clone();
    let mut yb = b;
    let mut momentum = 1.0f64;
    let mut lipschitz = 1.0f64;
    let mut trace = TrainTrace {
        objectives: vec![obj],
        ..TrainTrace::default()
    };
    let mut at_anchor = true;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let (fy, gw, gb) = loss.value_grad(&yw, yb);
        let (cw, cb, fc) = loop {
            let step = 1.0 / lipschitz;
            let cw = (&yw - &(&gw * step)).mapv(|v| soft_threshold(v, lambda * step));
            let cb = yb - gb * step;
            let fc = loss.value(&cw, cb);
            let dw = &cw - &yw;
            let db = cb - yb;
            let model = fy + gw.dot(&dw) + gb * db + 0.5 * lipschitz * (dw.dot(&dw) + db * db);
            if fc <= model + 1e-12 * fy.abs().max(1.0) || !lipschitz.is_finite() {
                break (cw, cb, fc);
            }
            lipschitz *= 2.0;
        };
        let cand_obj = fc + lambda * l1(&cw);

        if cand_obj > obj {
            // Momentum overshot: restart from the last accepted iterate.
            trace.restarts += 1;
            if at_anchor {
                trace.converged = true;
                break;
            }
            yw = w.clone();
            yb = b;
            momentum = 1.0;
            at_anchor = true;
            continue;
        }

        let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        let beta = (momentum - 1.0) / next_momentum;
        yw = &cw + &((&cw - &w) * beta);
        yb = cb + (cb - b) * beta;
        momentum = next_momentum;
        at_anchor = false;

        let rel = (obj - cand_obj) / obj.abs().max(1.0);
        w = cw;
        b = cb;
        obj = cand_obj;
        trace.objectives.push(obj);

        if rel <= cfg.tol && stationarity(&loss, &w, b, lambda) <= kkt_tol {
            trace.converged = true;
            break;
        }
    }

    for (j, wj) in w.iter_mut().enumerate() {
        if !scaler.active[j] {
            *wj = 0.0;
        }
    }

    let model = ProbeModel {
        lambda,
        weights: w.to_vec(),
        intercept: b,
        means: scaler.means,
        stds: scaler.stds,
        n_iterations_used: iterations,
        feature_len: d,
    };
    Ok((model, trace))
}

impl ProbeModel {
    /// Linear score `w . x~ + b` for each row.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.feature_len {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.feature_len,
                x.ncols()
            )));
        }
        Ok(x
            .axis_iter(Axis(0))
            .map(|row| {
                let mut z = self.intercept;
                for j in 0..self.feature_len {
                    if self.weights[j] != 0.0 {
                        z += self.weights[j] * (row[j] - self.means[j]) / self.stds[j];
                    }
                }
                z
            })
            .collect())
    }

    /// Indices of features with nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.feature_len).filter(|&j| self.weights[j] != 0.0).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ProbeModel = serde_json::from_str(text)?;
        let d = model.feature_len;
        if model.weights.len() != d || model.means.len() != d || model.stds.len() != d {
            return Err(Error::Schema(format!(
                "model arrays disagree with feature_len {d}"
            )));
        }
        if model.stds.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Schema("model stds must be positive".into()));
        }
        Ok(model)
    }
}

/// `P(y = 1 | x)` for each row of `x`.
pub fn predict_proba(model: &ProbeModel, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    Ok(model.decision_function(x)?.into_iter().map(sigmoid).collect())
}
