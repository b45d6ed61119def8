//! Non-negative matrix factorization, `V ≈ W H`, by multiplicative updates
//! under the Frobenius loss.
//!
//! Each update multiplies a factor elementwise by a ratio of non-negative
//! terms, so factors stay non-negative and the reconstruction error never
//! increases. `EPS` in the denominators only enlarges the majorizing
//! diagonal, which keeps that guarantee.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, AGG_PREFIX};
use crate::rng;

pub const EPS: f64 = 1e-12;

/// Residual, relative to `‖V‖_F`, below which the fit is exact to rounding
/// and iteration stops.
pub const EXACT_FIT: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop once the relative error improvement of an iteration drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl NmfConfig {
    pub fn new(rank: usize, seed: u64) -> NmfConfig {
        NmfConfig { rank, max_iters: 500, tol: 1e-5, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfFactors {
    /// n × r weights, one row per sample.
    pub w: Array2<f64>,
    /// r × d patterns.
    pub h: Array2<f64>,
    pub rank: usize,
    pub final_error: f64,
    /// Frobenius error at initialization followed by one entry per iteration.
    pub error_trace: Vec<f64>,
}

pub fn frobenius_error(v: ArrayView2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let approx = w.dot(h);
    v.iter().zip(approx.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn check_input(v: ArrayView2<f64>) -> Result<()> {
    if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::invalid(format!("NMF input must be finite and non-negative, found {bad}")));
    }
    Ok(())
}

/// Uniform(0,1) entries scaled by `sqrt(mean(V) / rank)` so that `W H`
/// starts at the data's magnitude.
fn init_factor(rows: usize, cols: usize, scale: f64, rng: &mut rng::Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>() * scale)
}

fn update_w(v: ArrayView2<f64>, w: &mut Array2<f64>, h: &Array2<f64>) {
    let numer = v.dot(&h.t());
    let denom = w.dot(&h.dot(&h.t()));
    ndarray::Zip::from(w).and(&numer).and(&denom).for_each(|w, &n, &d| *w *= n / (d + EPS));
}

fn update_h(v: ArrayView2<f64>, w: &Array2<f64>, h: &mut Array2<f64>) {
    let numer = w.t().dot(&v);
    let denom = w.t().dot(w).dot(&*h);
    ndarray::Zip::from(h).and(&numer).and(&denom).for_each(|h, &n, &d| *h *= n / (d + EPS));
}

fn converged(prev: f64, cur: f64, tol: f64, norm: f64) -> bool {
    prev == 0.0 || cur <= EXACT_FIT * norm || (prev - cur) / prev < tol
}

fn norm(v: ArrayView2<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn nmf_factorize(v: ArrayView2<f64>, cfg: &NmfConfig) -> Result<NmfFactors> {
    check_input(v)?;
    let (n, d) = v.dim();
    if cfg.rank == 0 || cfg.rank > n.min(d) {
        return Err(Error::invalid(format!("rank {} outside 1..={}", cfg.rank, n.min(d))));
    }
    let mean = v.sum() / (n * d) as f64;
    let scale = (mean / cfg.rank as f64).sqrt();
    let mut rng = rng::seeded(cfg.seed);
    let mut w = init_factor(n, cfg.rank, scale, &mut rng);
    let mut h = init_factor(cfg.rank, d, scale, &mut rng);

    let v_norm = norm(v);
    let mut trace = vec![frobenius_error(v, &w, &h)];
    for _ in 0..cfg.max_iters {
        let before = (w.clone(), h.clone());
        update_h(v, &w, &mut h);
        update_w(v, &mut w, &h);
        let err = frobenius_error(v, &w, &h);
        let prev = *trace.last().expect("trace starts non-empty");
        if err > prev {
            // exact updates never raise the error: this is rounding at a fixed point
            (w, h) = before;
            break;
        }
        trace.push(err);
        if converged(prev, err, cfg.tol, v_norm) {
            break;
        }
    }
    Ok(NmfFactors { w, h, rank: cfg.rank, final_error: *trace.last().unwrap(), error_trace: trace })
}

/// Non-negative weights for new rows against fixed patterns `h`, by
/// multiplicative updates on `W` alone.
pub fn nmf_transform(v_new: ArrayView2<f64>, h: &Array2<f64>, cfg: &NmfConfig) -> Result<Array2<f64>> {
    check_input(v_new)?;
    if v_new.ncols() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: h.ncols(), found: v_new.ncols() });
    }
    let (m, d) = v_new.dim();
    let r = h.nrows();
    let mean = if m * d == 0 { 0.0 } else { v_new.sum() / (m * d) as f64 };
    let mut rng = rng::seeded(cfg.seed);
    let mut w = init_factor(m, r, (mean / r as f64).sqrt(), &mut rng);
    let v_norm = norm(v_new);
    let mut prev = frobenius_error(v_new, &w, h);
    for _ in 0..cfg.max_iters {
        update_w(v_new, &mut w, h);
        let err = frobenius_error(v_new, &w, h);
        if converged(prev, err, cfg.tol, v_norm) {
            break;
        }
        prev = err;
    }
    Ok(w)
}

/// Column-name prefix of NMF weight columns.
pub const NMF_PREFIX: &str = "nmf_";

/// Replaces the pageview-aggregation columns of `data` by `cfg.rank` NMF
/// weight columns, keeping every other column in place ahead of them.
pub fn reduce_dataset(data: &Dataset, cfg: &NmfConfig) -> Result<(Dataset, NmfFactors)> {
    let (agg, kept): (Vec<usize>, Vec<usize>) =
        (0..data.n_cols()).partition(|&j| data.feature_names[j].starts_with(AGG_PREFIX));
    if agg.is_empty() {
        return Err(Error::invalid("dataset has no aggregation columns to reduce"));
    }
    let factors = nmf_factorize(data.rows.select(Axis(1), &agg).view(), cfg)?;
    let rows = concatenate(Axis(1), &[data.rows.select(Axis(1), &kept).view(), factors.w.view()])
        .expect("row counts agree");
    let mut names: Vec<String> = kept.iter().map(|&j| data.feature_names[j].clone()).collect();
    names.extend((0..cfg.rank).map(|k| format!("{NMF_PREFIX}{k}")));
    let mut meta = data.meta.clone();
    meta.nmf_rank = Some(cfg.rank);
    meta.nmf_seed = Some(cfg.seed);
    let reduced = Dataset::new(rows, data.labels.clone(), names, data.row_ids.clone(), meta)?;
    Ok((reduced, factors))
}
