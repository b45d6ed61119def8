use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::cv::{holdout_evaluate, EvalReport, Learner};
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::neural::{self, Activation, Hyperparams};
use crate::rng;

/// Ranges sampled by [`random_search`]. Learning rate is log-uniform, every
/// other range uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub layers: (usize, usize),
    /// Smallest first layer when the network has a single hidden layer.
    pub min_units_single: usize,
    /// Smallest layer in every other position.
    pub min_units: usize,
    pub max_units: usize,
    pub dropout: (f64, f64),
    pub annealing_delay: (f64, f64),
    pub learning_rate: (f64, f64),
    pub momentum: (f64, f64),
    pub l2: (f64, f64),
    pub noise: (f64, f64),
    pub activations: Vec<Activation>,
}

impl SearchSpace {
    fn base() -> SearchSpace {
        SearchSpace {
            layers: (1, 2),
            min_units_single: 16,
            min_units: 64,
            max_units: neural::MAX_HIDDEN_UNITS,
            dropout: (0.0, neural::MAX_DROPOUT),
            annealing_delay: (0.0, 1.0),
            learning_rate: neural::LEARNING_RATE_RANGE,
            momentum: (0.0, neural::MAX_MOMENTUM),
            l2: (0.0, neural::MAX_L2),
            noise: (0.0, neural::MAX_NOISE),
            activations: vec![Activation::Sigmoid, Activation::Relu],
        }
    }

    /// Stacked denoising autoencoders: every range, both activations.
    pub fn sda() -> SearchSpace {
        SearchSpace::base()
    }

    /// Deep belief networks: sigmoid units and no input noise.
    pub fn dbn() -> SearchSpace {
        SearchSpace { noise: (0.0, 0.0), activations: vec![Activation::Sigmoid], ..SearchSpace::base() }
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> Hyperparams {
        let uniform = |rng: &mut rng::Rng, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let n_layers = rng.random_range(self.layers.0..=self.layers.1);
        let hidden_units = (0..n_layers)
            .map(|k| {
                let lo = if n_layers == 1 && k == 0 { self.min_units_single } else { self.min_units };
                rng.random_range(lo..=self.max_units)
            })
            .collect();
        let max_epochs = if n_layers == 1 { neural::MAX_EPOCHS_SHALLOW } else { neural::MAX_EPOCHS_DEEP };
        let epochs = rng.random_range(neural::MIN_EPOCHS..=max_epochs);
        let (lo, hi) = self.learning_rate;
        let initial_learning_rate = (rng.random_range(lo.ln()..=hi.ln())).exp().clamp(lo, hi);
        let activation = self.activations[rng.random_range(0..self.activations.len())];
        Hyperparams {
            hidden_units,
            activation,
            epochs,
            initial_learning_rate,
            annealing_delay_fraction: uniform(rng, self.annealing_delay),
            momentum: uniform(rng, self.momentum),
            l2_weight_cost: uniform(rng, self.l2),
            dropout_fraction: uniform(rng, self.dropout),
            input_noise_level: uniform(rng, self.noise),
            batch_size: neural::BATCH_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub hyperparams: Hyperparams,
    /// Mean validation AUC over the four holdout models; `None` if diverged.
    pub validation_auc: Option<f64>,
    pub test_auc: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Hyperparams,
    pub best_trial: usize,
    pub report: EvalReport,
    pub trials: Vec<Trial>,
}

/// Samples `budget` configurations from one generator seeded with `seed`
/// and scores trial `i` by the holdout protocol under `derive_seed(seed, i)`.
/// Diverged trials are logged as violations; the highest mean validation
/// AUC wins, earliest trial on ties.
pub fn random_search<L, F>(space: &SearchSpace, budget: usize, dataset: &Dataset, seed: u64, make: F) -> Result<SearchOutcome>
where
    L: Learner,
    F: Fn(Hyperparams) -> L,
{
    if budget == 0 {
        return Err(Error::invalid("search budget must be at least 1"));
    }
    let mut sampler = rng::seeded(seed);
    let mut trials = Vec::with_capacity(budget);
    let mut best: Option<(usize, f64, EvalReport)> = None;
    for index in 0..budget {
        let hp = space.sample(&mut sampler);
        hp.validate()?;
        match holdout_evaluate(&make(hp.clone()), dataset, rng::derive_seed(seed, index as u64)) {
            Ok(report) => {
                let val = report.mean_validation_auc().expect("holdout reports carry validation AUCs");
                log::info!("trial {index}: validation AUC {val:.4}, test AUC {:.4}", report.auc);
                trials.push(Trial { index, hyperparams: hp, validation_auc: Some(val), test_auc: Some(report.auc), diverged: false });
                if best.as_ref().is_none_or(|b| val > b.1) {
                    best = Some((index, val, report));
                }
            }
            Err(Error::Diverged { stage, epoch }) => {
                log::warn!("trial {index} diverged in {stage} at epoch {epoch}");
                trials.push(Trial { index, hyperparams: hp, validation_auc: None, test_auc: None, diverged: true });
            }
            Err(e) => return Err(e),
        }
    }
    let (best_trial, _, report) = best.ok_or(Error::AllTrialsDiverged(budget))?;
    Ok(SearchOutcome { best: trials[best_trial].hyperparams.clone(), best_trial, report, trials })
}
