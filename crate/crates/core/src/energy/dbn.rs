use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::rbm::{reconstruction_cross_entropy, sample_h_batch, sample_v_batch, Rbm};
use crate::error::{check_dim, Error, Result};
use crate::features::Dataset;
use crate::neural::{finetune_network, Activation, Dense, Hyperparams, Network};
use crate::neural::{Momentum, Param, Schedule};
use crate::rng;

/// How the hidden layer is propagated in the CD-1 chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cd1Mode {
    /// Sample `h ~ P(h|v)` and `v′ ~ P(v|h)`.
    #[default]
    Sampled,
    /// Use the conditional probabilities in place of samples. Deterministic,
    /// so symmetric units stay symmetric.
    MeanField,
}

/// Batch-averaged CD-1 estimate of the log-likelihood gradient (an ascent
/// direction): `⟨p(h|v) vᵀ⟩_data − ⟨p(h|v′) v′ᵀ⟩_recon`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradients {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub c: Array1<f64>,
}

pub fn cd1_gradients(rbm: &Rbm, v0: ArrayView2<f64>, mode: Cd1Mode, rng: &mut rng::Rng) -> Result<RbmGradients> {
    if v0.nrows() == 0 {
        return Err(Error::invalid("CD-1 needs a non-empty batch"));
    }
    check_dim(rbm.n_visible(), v0.ncols())?;
    let (ph0, h0) = sample_h_batch(rbm, v0, rng)?;
    let h0 = if mode == Cd1Mode::MeanField { ph0.clone() } else { h0 };
    let (pv1, v1) = sample_v_batch(rbm, h0.view(), rng)?;
    let v1 = if mode == Cd1Mode::MeanField { pv1 } else { v1 };
    let ph1 = rbm.hidden_probs(v1.view())?;
    let n = v0.nrows() as f64;
    Ok(RbmGradients {
        w: (ph0.t().dot(&v0) - ph1.t().dot(&v1)) / n,
        b: (&ph0 - &ph1).sum_axis(Axis(0)) / n,
        c: (&v0 - &v1).sum_axis(Axis(0)) / n,
    })
}

/// One plain CD-1 step of size `learning_rate` on `batch`.
pub fn cd1_update(rbm: &Rbm, batch: ArrayView2<f64>, learning_rate: f64, seed: u64) -> Result<Rbm> {
    cd1_step(rbm, batch, learning_rate, Cd1Mode::Sampled, &mut rng::seeded(seed))
}

pub fn cd1_step(rbm: &Rbm, batch: ArrayView2<f64>, learning_rate: f64, mode: Cd1Mode, rng: &mut rng::Rng) -> Result<Rbm> {
    let g = cd1_gradients(rbm, batch, mode, rng)?;
    Ok(Rbm { w: &rbm.w + &(g.w * learning_rate), b: &rbm.b + &(g.b * learning_rate), c: &rbm.c + &(g.c * learning_rate) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dbn {
    pub layers: Vec<Rbm>,
}

impl Dbn {
    pub fn sizes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.layers.first().map(|l| vec![l.n_visible()]).unwrap_or_default();
        out.extend(self.layers.iter().map(Rbm::n_hidden));
        out
    }

    pub fn check_chain(&self) -> Result<()> {
        for pair in self.layers.windows(2) {
            check_dim(pair[0].n_hidden(), pair[1].n_visible())?;
        }
        Ok(())
    }
}

/// CD-1 training of one RBM with momentum, L2 cost and annealing. Returns
/// the reconstruction cross-entropy before training and after each epoch.
pub fn train_rbm(data: ArrayView2<f64>, n_hidden: usize, hp: &Hyperparams, seed: u64) -> Result<(Rbm, Vec<f64>)> {
    hp.check_trainable()?;
    if n_hidden == 0 {
        return Err(Error::invalid("RBM needs at least one hidden unit"));
    }
    let mut rng = rng::seeded(seed);
    let mut rbm = Rbm::init(data.ncols(), n_hidden, &mut rng);
    let n = data.nrows();
    let schedule = Schedule {
        initial: hp.initial_learning_rate,
        delay: hp.annealing_delay_fraction,
        total: hp.epochs * n.div_ceil(hp.batch_size),
    };
    let mut opt = Momentum::new(&[rbm.w.len(), rbm.b.len(), rbm.c.len()], hp.momentum, hp.l2_weight_cost);
    let mut trace = vec![reconstruction_cross_entropy(&rbm, data)?];
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0;
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            let v = data.select(Axis(0), batch);
            let g = cd1_gradients(&rbm, v.view(), Cd1Mode::Sampled, &mut rng)?;
            // the optimizer descends, CD-1 gives an ascent direction
            let (gw, gb, gc) = (-g.w, -g.b, -g.c);
            let params = vec![
                Param { values: rbm.w.as_slice_mut().expect("standard layout"), decay: true },
                Param { values: rbm.b.as_slice_mut().expect("standard layout"), decay: false },
                Param { values: rbm.c.as_slice_mut().expect("standard layout"), decay: false },
            ];
            opt.step(params, &[gw.as_slice().unwrap(), gb.as_slice().unwrap(), gc.as_slice().unwrap()], schedule.rate(t));
            t += 1;
        }
        let ce = reconstruction_cross_entropy(&rbm, data)?;
        if !ce.is_finite() || rbm.w.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { stage: "RBM pretraining", epoch });
        }
        trace.push(ce);
    }
    Ok((rbm, trace))
}

/// Greedy stacking: each RBM is trained on the hidden probabilities of the
/// one below. Layer 0 uses `seed`, layer `k` uses `derive_seed(seed, k)`.
/// Inputs are read as Bernoulli probabilities and must lie in [0, 1].
pub fn dbn_pretrain(data: ArrayView2<f64>, layer_sizes: &[usize], hp: &Hyperparams, seed: u64) -> Result<(Dbn, Vec<Vec<f64>>)> {
    if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("DBN inputs must lie in [0, 1], found {bad}")));
    }
    let mut input = data.to_owned();
    let mut layers = Vec::with_capacity(layer_sizes.len());
    let mut traces = Vec::with_capacity(layer_sizes.len());
    for (k, &size) in layer_sizes.iter().enumerate() {
        let layer_seed = if k == 0 { seed } else { rng::derive_seed(seed, k as u64) };
        let (rbm, trace) = train_rbm(input.view(), size, hp, layer_seed)?;
        log::debug!("RBM layer {k}: reconstruction CE {:?} -> {:?}", trace.first(), trace.last());
        input = rbm.hidden_probs(input.view())?;
        layers.push(rbm);
        traces.push(trace);
    }
    Ok((Dbn { layers }, traces))
}

/// Sigmoid network whose hidden layers start from the DBN weights and
/// hidden offsets, with a new softmax head, fine-tuned on `train` (scaled
/// rows).
pub fn dbn_to_network(dbn: &Dbn, train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<(Network, Vec<f64>)> {
    dbn.check_chain()?;
    let hidden: Vec<Dense> = dbn.layers.iter().map(|r| Dense { w: r.w.clone(), b: r.b.clone() }).collect();
    let net = Network::with_head(hidden, Activation::Sigmoid, hp.dropout_fraction, &mut rng::substream(seed, 0));
    finetune_network(net, train, hp, seed)
}
