use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::hyper::{Hyperparams, MAX_NOISE};
use super::optim::{Momentum, Param, Schedule};
use crate::error::{check_dim, Error, Result};
use crate::math::sigmoid;
use crate::rng;

/// Autoencoder with tied weights: the decoder uses `wᵀ`, so there is no
/// separate decoder matrix to drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderLayer {
    /// hidden × visible.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub b_prime: Array1<f64>,
    pub activation: Activation,
}

/// `uniform(−1/√fan_in, 1/√fan_in)` entries.
pub(crate) fn init_weights(rows: usize, fan_in: usize, rng: &mut rng::Rng) -> Array2<f64> {
    let r = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, fan_in), || rng.random_range(-r..=r))
}

/// `act(x wᵀ + b)` for a batch of row vectors.
pub(crate) fn affine_act(x: ArrayView2<f64>, w: &Array2<f64>, b: &Array1<f64>, act: Activation) -> Array2<f64> {
    let mut out = x.dot(&w.t()) + b;
    out.mapv_inplace(|v| act.apply(v));
    out
}

impl AutoencoderLayer {
    pub fn init(n_visible: usize, n_hidden: usize, activation: Activation, rng: &mut rng::Rng) -> AutoencoderLayer {
        AutoencoderLayer {
            w: init_weights(n_hidden, n_visible, rng),
            b: Array1::zeros(n_hidden),
            b_prime: Array1::zeros(n_visible),
            activation,
        }
    }

    pub fn zeros(n_visible: usize, n_hidden: usize, activation: Activation) -> AutoencoderLayer {
        AutoencoderLayer {
            w: Array2::zeros((n_hidden, n_visible)),
            b: Array1::zeros(n_hidden),
            b_prime: Array1::zeros(n_visible),
            activation,
        }
    }

    pub fn n_visible(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_hidden(&self) -> usize {
        self.w.nrows()
    }

    pub fn encode(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.n_visible(), x.len())?;
        Ok((self.w.dot(&x) + &self.b).mapv(|v| self.activation.apply(v)))
    }

    /// Reconstruction through `wᵀ`; the output units are always sigmoid.
    pub fn decode(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.n_hidden(), y.len())?;
        Ok((self.w.t().dot(&y) + &self.b_prime).mapv(sigmoid))
    }

    pub fn encode_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.n_visible(), x.ncols())?;
        Ok(affine_act(x, &self.w, &self.b, self.activation))
    }

    pub fn decode_batch(&self, y: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.n_hidden(), y.ncols())?;
        let mut z = y.dot(&self.w) + &self.b_prime;
        z.mapv_inplace(sigmoid);
        Ok(z)
    }

    fn params_mut(&mut self) -> Vec<Param<'_>> {
        vec![
            Param { values: self.w.as_slice_mut().expect("standard layout"), decay: true },
            Param { values: self.b.as_slice_mut().expect("standard layout"), decay: false },
            Param { values: self.b_prime.as_slice_mut().expect("standard layout"), decay: false },
        ]
    }
}

/// Masking noise: each entry zeroed independently with probability `level`.
pub fn corrupt(x: ArrayView2<f64>, level: f64, seed: u64) -> Result<Array2<f64>> {
    corrupt_with(x, level, &mut rng::seeded(seed))
}

pub(crate) fn corrupt_with(x: ArrayView2<f64>, level: f64, rng: &mut rng::Rng) -> Result<Array2<f64>> {
    if !(0.0..=MAX_NOISE).contains(&level) {
        return Err(Error::invalid(format!("noise level {level} outside [0, {MAX_NOISE}]")));
    }
    let mut out = x.to_owned();
    if level > 0.0 {
        out.iter_mut().for_each(|v| {
            if rng.random::<f64>() < level {
                *v = 0.0;
            }
        });
    }
    Ok(out)
}

/// `½ Σ (t − z)²`.
pub fn reconstruction_loss(t: ArrayView1<f64>, z: ArrayView1<f64>) -> f64 {
    0.5 * t.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Row-averaged [`reconstruction_loss`].
pub fn batch_reconstruction_loss(t: ArrayView2<f64>, z: ArrayView2<f64>) -> f64 {
    if t.nrows() == 0 {
        return 0.0;
    }
    0.5 * t.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / t.nrows() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeGradients {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub b_prime: Array1<f64>,
}

/// Loss of reconstructing `x_orig` from `x_corr`, averaged over rows.
pub fn ae_layer_loss(layer: &AutoencoderLayer, x_orig: ArrayView2<f64>, x_corr: ArrayView2<f64>) -> Result<f64> {
    check_dim(x_orig.nrows(), x_corr.nrows())?;
    check_dim(x_orig.ncols(), x_corr.ncols())?;
    let z = layer.decode_batch(layer.encode_batch(x_corr)?.view())?;
    Ok(batch_reconstruction_loss(x_orig, z.view()))
}

/// Batch-averaged gradients of [`ae_layer_loss`]. `w` collects both its
/// decoder role (`δᴼ yᵀ`, transposed) and its encoder role (`δᴴ x_corrᵀ`).
pub fn ae_layer_gradients(
    layer: &AutoencoderLayer,
    x_orig: ArrayView2<f64>,
    x_corr: ArrayView2<f64>,
) -> Result<AeGradients> {
    check_dim(x_orig.nrows(), x_corr.nrows())?;
    check_dim(x_orig.ncols(), x_corr.ncols())?;
    let y = layer.encode_batch(x_corr)?;
    let z = layer.decode_batch(y.view())?;
    let n = x_orig.nrows().max(1) as f64;
    // δᴼ = (z − t) z (1 − z)
    let delta_o = (&z - &x_orig) * &z.mapv(|v| v * (1.0 - v));
    // δᴴ = (δᴼ wᵀ) ⊙ act'(y)
    let mut delta_h = delta_o.dot(&layer.w.t());
    ndarray::Zip::from(&mut delta_h).and(&y).for_each(|d, &y| *d *= layer.activation.derivative_from_output(y));
    let w = (y.t().dot(&delta_o) + delta_h.t().dot(&x_corr)) / n;
    Ok(AeGradients { w, b: delta_h.sum_axis(Axis(0)) / n, b_prime: delta_o.sum_axis(Axis(0)) / n })
}

/// Mini-batch SGD on a denoising autoencoder. Returns the layer and the
/// clean-input reconstruction loss before training and after each epoch.
pub fn train_ae_layer(
    data: ArrayView2<f64>,
    n_hidden: usize,
    hp: &Hyperparams,
    seed: u64,
) -> Result<(AutoencoderLayer, Vec<f64>)> {
    hp.check_trainable()?;
    if n_hidden == 0 {
        return Err(Error::invalid("autoencoder needs at least one hidden unit"));
    }
    let mut rng = rng::seeded(seed);
    let mut layer = AutoencoderLayer::init(data.ncols(), n_hidden, hp.activation, &mut rng);
    let n = data.nrows();
    let batches_per_epoch = n.div_ceil(hp.batch_size);
    let schedule = Schedule {
        initial: hp.initial_learning_rate,
        delay: hp.annealing_delay_fraction,
        total: hp.epochs * batches_per_epoch,
    };
    let mut opt = Momentum::new(&[layer.w.len(), layer.b.len(), layer.b_prime.len()], hp.momentum, hp.l2_weight_cost);
    let mut trace = vec![ae_layer_loss(&layer, data, data)?];
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0;
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            let x = data.select(Axis(0), batch);
            let x_corr = corrupt_with(x.view(), hp.input_noise_level, &mut rng)?;
            let g = ae_layer_gradients(&layer, x.view(), x_corr.view())?;
            let grads = [g.w.as_slice().unwrap(), g.b.as_slice().unwrap(), g.b_prime.as_slice().unwrap()];
            opt.step(layer.params_mut(), &grads, schedule.rate(t));
            t += 1;
        }
        let loss = ae_layer_loss(&layer, data, data)?;
        if !loss.is_finite() || layer.w.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { stage: "autoencoder pretraining", epoch });
        }
        trace.push(loss);
    }
    Ok((layer, trace))
}

/// Greedy layer-wise pretraining: layer `k` learns to denoise the clean
/// encodings produced by layers `0..k`. Layer 0 uses `seed` itself, layer
/// `k` uses `derive_seed(seed, k)`.
pub fn stack_pretrain(
    data: ArrayView2<f64>,
    layer_sizes: &[usize],
    hp: &Hyperparams,
    seed: u64,
) -> Result<Vec<AutoencoderLayer>> {
    let mut input = data.to_owned();
    let mut stack = Vec::with_capacity(layer_sizes.len());
    for (k, &size) in layer_sizes.iter().enumerate() {
        let layer_seed = if k == 0 { seed } else { rng::derive_seed(seed, k as u64) };
        let (layer, trace) = train_ae_layer(input.view(), size, hp, layer_seed)?;
        log::debug!("autoencoder layer {k}: loss {:?} -> {:?}", trace.first(), trace.last());
        input = layer.encode_batch(input.view())?;
        stack.push(layer);
    }
    Ok(stack)
}
