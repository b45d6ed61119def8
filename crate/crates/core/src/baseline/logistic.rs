use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::features::Dataset;
use crate::math::{sigmoid, softplus};
use crate::preprocess::{ScaleKind, Scaler};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub batch_size: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { learning_rate: 0.1, epochs: 100, l2: 1e-3, batch_size: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Array1<f64>,
    pub bias: f64,
    pub scaler: Scaler,
}

impl LogisticModel {
    pub fn zeros(d: usize) -> LogisticModel {
        LogisticModel { weights: Array1::zeros(d), bias: 0.0, scaler: Scaler::identity(ScaleKind::Standard, d) }
    }

    /// Buy probabilities for raw (unscaled) rows.
    pub fn predict_batch(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        let x = self.scaler.transform(rows)?;
        Ok(x.dot(&self.weights).iter().map(|z| sigmoid(z + self.bias)).collect())
    }
}

/// Mean cross-entropy plus `l2/2 · ‖w‖²` over already-scaled rows.
pub fn logistic_loss(w: ArrayView1<f64>, b: f64, x: ArrayView2<f64>, y: &[bool], l2: f64) -> f64 {
    let z = x.dot(&w);
    let ce: f64 = z
        .iter()
        .zip(y)
        .map(|(&z, &t)| {
            let z = z + b;
            // -ln σ(z) = softplus(-z), -ln(1-σ(z)) = softplus(z)
            if t { softplus(-z) } else { softplus(z) }
        })
        .sum();
    ce / y.len().max(1) as f64 + 0.5 * l2 * w.dot(&w)
}

/// Gradient of [`logistic_loss`] with respect to `(w, b)`.
pub fn logistic_gradient(w: ArrayView1<f64>, b: f64, x: ArrayView2<f64>, y: &[bool], l2: f64) -> (Array1<f64>, f64) {
    let n = y.len().max(1) as f64;
    let resid: Array1<f64> =
        x.dot(&w).iter().zip(y).map(|(&z, &t)| sigmoid(z + b) - f64::from(u8::from(t))).collect();
    let gw = x.t().dot(&resid) / n + &w * l2;
    (gw, resid.sum() / n)
}

pub fn train_logistic(train: &Dataset, cfg: &LogisticConfig, seed: u64) -> Result<LogisticModel> {
    train_logistic_traced(train, cfg, seed).map(|(m, _)| m)
}

/// Seeded mini-batch gradient descent from zero weights. Returns the model
/// and the full training loss after each epoch.
pub fn train_logistic_traced(train: &Dataset, cfg: &LogisticConfig, seed: u64) -> Result<(LogisticModel, Vec<f64>)> {
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let scaler = Scaler::fit(ScaleKind::Standard, train.rows.view());
    let x: Array2<f64> = scaler.transform(train.rows.view())?;
    let y = &train.labels;
    let mut w = Array1::<f64>::zeros(x.ncols());
    let mut b = 0.0;
    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<bool> = batch.iter().map(|&i| y[i]).collect();
            let (gw, gb) = logistic_gradient(w.view(), b, xb.view(), &yb, cfg.l2);
            w.scaled_add(-cfg.learning_rate, &gw);
            b -= cfg.learning_rate * gb;
        }
        let loss = logistic_loss(w.view(), b, x.view(), y, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Diverged { stage: "logistic regression", epoch });
        }
        trace.push(loss);
    }
    Ok((LogisticModel { weights: w, bias: b, scaler }, trace))
}

pub fn predict_logistic(model: &LogisticModel, x: ArrayView1<f64>) -> Result<f64> {
    check_dim(model.weights.len(), x.len())?;
    let xs = model.scaler.transform_row(x)?;
    let z: f64 = xs.iter().zip(model.weights.iter()).map(|(a, b)| a * b).sum::<f64>() + model.bias;
    Ok(sigmoid(z))
}
