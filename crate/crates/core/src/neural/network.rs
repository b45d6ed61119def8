use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::activation::{softmax_rows, Activation};
use super::autoencoder::{affine_act, init_weights, AutoencoderLayer};
use super::hyper::Hyperparams;
use super::optim::{Momentum, Param, Schedule};
use crate::error::{check_dim, Error, Result};
use crate::features::Dataset;
use crate::preprocess::{ScaleKind, Scaler};
use crate::rng;

/// Fully connected layer, `out × in` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn init(n_in: usize, n_out: usize, rng: &mut rng::Rng) -> Dense {
        Dense { w: init_weights(n_out, n_in, rng), b: Array1::zeros(n_out) }
    }

    pub fn n_in(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.w.nrows()
    }
}

impl From<&AutoencoderLayer> for Dense {
    fn from(l: &AutoencoderLayer) -> Dense {
        Dense { w: l.w.clone(), b: l.b.clone() }
    }
}

/// Feed-forward classifier: hidden layers sharing one activation and a
/// two-way softmax head whose second output is the buy probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub hidden: Vec<Dense>,
    pub head: Dense,
    pub activation: Activation,
    /// Dropout rate applied to each hidden layer's output during training.
    pub dropout: Vec<f64>,
    /// Applied to raw features before the first layer.
    pub scaler: Scaler,
}

/// Per-layer weight and bias gradients, hidden layers first, head last.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

struct Forward {
    /// Input to each hidden layer and to the head, after dropout.
    inputs: Vec<Array2<f64>>,
    /// Hidden activations before dropout.
    outputs: Vec<Array2<f64>>,
    /// Inverted dropout multipliers per hidden layer (`mask / (1 − p)`).
    keep: Vec<Option<Array2<f64>>>,
    probs: Array2<f64>,
}

/// Inverted dropout multipliers: 0 with probability `rate`, else `1/(1−rate)`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut rng::Rng) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn((rows, cols), || if rng.random::<f64>() < rate { 0.0 } else { keep })
}

fn one_hot(labels: &[bool]) -> Array2<f64> {
    Array2::from_shape_fn((labels.len(), 2), |(i, k)| f64::from(u8::from(labels[i] == (k == 1))))
}

/// Mean categorical cross-entropy `−Σₖ tₖ ln zₖ` over rows.
pub fn cross_entropy(probs: ArrayView2<f64>, labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let total: f64 = labels.iter().enumerate().map(|(i, &l)| -probs[[i, usize::from(l)]].max(f64::MIN_POSITIVE).ln()).sum();
    total / labels.len() as f64
}

impl Network {
    /// Randomly initialized network of the given hidden sizes.
    pub fn random(n_inputs: usize, hidden: &[usize], activation: Activation, dropout: f64, rng: &mut rng::Rng) -> Network {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut n_in = n_inputs;
        for &h in hidden {
            layers.push(Dense::init(n_in, h, rng));
            n_in = h;
        }
        Network::with_head(layers, activation, dropout, rng)
    }

    /// Attaches a freshly initialized softmax head to pretrained layers.
    pub fn with_head(hidden: Vec<Dense>, activation: Activation, dropout: f64, rng: &mut rng::Rng) -> Network {
        let n_in = hidden.first().map(Dense::n_in).unwrap_or(0);
        let last = hidden.last().map(Dense::n_out).unwrap_or(0);
        let head = Dense::init(last, 2, rng);
        Network { dropout: vec![dropout; hidden.len()], hidden, head, activation, scaler: Scaler::identity(ScaleKind::MinMax, n_in) }
    }

    pub fn n_inputs(&self) -> usize {
        self.hidden.first().unwrap_or(&self.head).n_in()
    }

    /// Layer shapes as `(in, out)`, head last.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.hidden.iter().chain(std::iter::once(&self.head)).map(|d| (d.n_in(), d.n_out())).collect()
    }

    pub(crate) fn check_chain(&self) -> Result<()> {
        let mut n = self.n_inputs();
        for d in self.hidden.iter().chain(std::iter::once(&self.head)) {
            check_dim(n, d.n_in())?;
            n = d.n_out();
        }
        check_dim(2, n)?;
        check_dim(self.hidden.len(), self.dropout.len())
    }

    fn forward(&self, x: ArrayView2<f64>, mut rng: Option<&mut rng::Rng>) -> Forward {
        let mut inputs = Vec::with_capacity(self.hidden.len() + 1);
        let mut outputs = Vec::with_capacity(self.hidden.len());
        let mut keep = Vec::with_capacity(self.hidden.len());
        let mut cur = x.to_owned();
        for (layer, &rate) in self.hidden.iter().zip(&self.dropout) {
            let out = affine_act(cur.view(), &layer.w, &layer.b, self.activation);
            let mask = match rng.as_deref_mut() {
                Some(r) if rate > 0.0 => Some(dropout_mask(out.nrows(), out.ncols(), rate, r)),
                _ => None,
            };
            let next = match &mask {
                Some(m) => &out * m,
                None => out.clone(),
            };
            inputs.push(std::mem::replace(&mut cur, next));
            outputs.push(out);
            keep.push(mask);
        }
        let logits = cur.dot(&self.head.w.t()) + &self.head.b;
        inputs.push(cur);
        Forward { inputs, outputs, keep, probs: softmax_rows(logits.view()) }
    }

    /// Buy probabilities for already-scaled rows, without dropout.
    pub fn forward_scaled(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.n_inputs(), x.ncols())?;
        Ok(self.forward(x, None).probs)
    }

    /// Softmax outputs of a training-mode pass with dropout drawn from `rng`.
    pub fn forward_train(&self, x: ArrayView2<f64>, rng: &mut rng::Rng) -> Result<Array2<f64>> {
        check_dim(self.n_inputs(), x.ncols())?;
        Ok(self.forward(x, Some(rng)).probs)
    }

    /// Mean cross-entropy on scaled rows, no dropout.
    pub fn loss(&self, x: ArrayView2<f64>, labels: &[bool]) -> Result<f64> {
        Ok(cross_entropy(self.forward_scaled(x)?.view(), labels))
    }

    /// Mean `−Σₖ tₖ ln zₖ` against a target matrix with one column per head
    /// output, no dropout.
    pub fn loss_targets(&self, x: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
        let probs = self.forward_scaled(x)?;
        check_dim(probs.ncols(), targets.ncols())?;
        check_dim(probs.nrows(), targets.nrows())?;
        let total: f64 = ndarray::Zip::from(&probs).and(targets).fold(0.0, |acc, &z, &t| acc - t * z.max(f64::MIN_POSITIVE).ln());
        Ok(total / targets.nrows().max(1) as f64)
    }

    /// Batch-averaged gradient of the mean cross-entropy on scaled rows.
    /// With `rng` set, the gradient is that of the dropout-masked network.
    pub fn gradients(&self, x: ArrayView2<f64>, labels: &[bool], rng: Option<&mut rng::Rng>) -> Result<GradientSet> {
        self.gradients_targets(x, one_hot(labels).view(), rng)
    }

    /// [`Network::gradients`] against a target matrix, for heads of any width.
    pub fn gradients_targets(&self, x: ArrayView2<f64>, targets: ArrayView2<f64>, rng: Option<&mut rng::Rng>) -> Result<GradientSet> {
        check_dim(self.n_inputs(), x.ncols())?;
        check_dim(x.nrows(), targets.nrows())?;
        check_dim(self.head.n_out(), targets.ncols())?;
        let fwd = self.forward(x, rng);
        let n = targets.nrows().max(1) as f64;
        // softmax + cross-entropy: δ = z − t
        let mut delta = &fwd.probs - &targets;
        let depth = self.hidden.len();
        let mut weights = Vec::with_capacity(depth + 1);
        let mut biases = Vec::with_capacity(depth + 1);
        weights.push(delta.t().dot(&fwd.inputs[depth]) / n);
        biases.push(delta.sum_axis(Axis(0)) / n);
        let mut upper = &self.head.w;
        for k in (0..depth).rev() {
            let mut d = delta.dot(upper);
            if let Some(m) = &fwd.keep[k] {
                d *= m;
            }
            ndarray::Zip::from(&mut d).and(&fwd.outputs[k]).for_each(|d, &y| *d *= self.activation.derivative_from_output(y));
            weights.push(d.t().dot(&fwd.inputs[k]) / n);
            biases.push(d.sum_axis(Axis(0)) / n);
            delta = d;
            upper = &self.hidden[k].w;
        }
        weights.reverse();
        biases.reverse();
        Ok(GradientSet { weights, biases })
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.head))
    }

    fn params_mut(&mut self) -> Vec<Param<'_>> {
        let mut out = Vec::new();
        for d in self.layers_mut() {
            out.push(Param { values: d.w.as_slice_mut().expect("standard layout"), decay: true });
            out.push(Param { values: d.b.as_slice_mut().expect("standard layout"), decay: false });
        }
        out
    }

    fn param_sizes(&self) -> Vec<usize> {
        self.hidden.iter().chain(std::iter::once(&self.head)).flat_map(|d| [d.w.len(), d.b.len()]).collect()
    }

    /// Buy probabilities for raw rows.
    pub fn predict_batch(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        let x = self.scaler.transform(rows)?;
        Ok(self.forward_scaled(x.view())?.column(1).to_vec())
    }
}

pub fn network_predict(network: &Network, x: ArrayView1<f64>) -> Result<f64> {
    check_dim(network.n_inputs(), x.len())?;
    let row = Array1::from(network.scaler.transform_row(x)?);
    Ok(network.forward_scaled(row.view().insert_axis(Axis(0)))?[[0, 1]])
}

/// Supervised training of a whole network by mini-batch backprop with
/// momentum, L2 cost, annealing and dropout. `train` holds scaled rows.
/// Returns the mean cross-entropy before training and after each epoch.
pub fn finetune_network(mut net: Network, train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<(Network, Vec<f64>)> {
    hp.check_trainable()?;
    net.check_chain()?;
    check_dim(net.n_inputs(), train.n_cols())?;
    let x = train.rows.view();
    let y = &train.labels;
    let n = train.n_rows();
    let mut rng = rng::seeded(seed);
    let schedule = Schedule {
        initial: hp.initial_learning_rate,
        delay: hp.annealing_delay_fraction,
        total: hp.epochs * n.div_ceil(hp.batch_size),
    };
    let mut opt = Momentum::new(&net.param_sizes(), hp.momentum, hp.l2_weight_cost);
    let mut trace = vec![net.loss(x, y)?];
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0;
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<bool> = batch.iter().map(|&i| y[i]).collect();
            let g = net.gradients(xb.view(), &yb, Some(&mut rng))?;
            let grads: Vec<&[f64]> = g
                .weights
                .iter()
                .zip(&g.biases)
                .flat_map(|(w, b)| [w.as_slice().expect("standard layout"), b.as_slice().expect("standard layout")])
                .collect();
            opt.step(net.params_mut(), &grads, schedule.rate(t));
            t += 1;
        }
        let loss = net.loss(x, y)?;
        if !loss.is_finite() || net.hidden.iter().chain(std::iter::once(&net.head)).any(|d| d.w.iter().any(|w| !w.is_finite())) {
            return Err(Error::Diverged { stage: "fine-tuning", epoch });
        }
        trace.push(loss);
    }
    Ok((net, trace))
}

/// Puts a softmax head on pretrained encoders and fine-tunes the stack.
pub fn finetune(stack: &[AutoencoderLayer], train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<(Network, Vec<f64>)> {
    let mut rng = rng::substream(seed, 0);
    let activation = stack.first().map_or(hp.activation, |l| l.activation);
    let net = Network::with_head(stack.iter().map(Dense::from).collect(), activation, hp.dropout_fraction, &mut rng);
    finetune_network(net, train, hp, seed)
}
