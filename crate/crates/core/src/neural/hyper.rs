use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{Error, Result};

pub const MAX_HIDDEN_UNITS: usize = 500;
pub const MAX_DROPOUT: f64 = 0.3;
pub const MAX_NOISE: f64 = 0.2;
pub const LEARNING_RATE_RANGE: (f64, f64) = (0.001, 0.25);
pub const MAX_MOMENTUM: f64 = 0.95;
pub const MAX_L2: f64 = 0.01;
pub const MIN_EPOCHS: usize = 10;
pub const MAX_EPOCHS_SHALLOW: usize = 100;
pub const MAX_EPOCHS_DEEP: usize = 150;
pub const BATCH_SIZE: usize = 128;

/// Training configuration shared by autoencoder stacks and DBNs. Pretraining
/// and fine-tuning run the same number of epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub hidden_units: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    /// Fraction of iterations at the initial rate before linear decay to zero.
    pub annealing_delay_fraction: f64,
    pub momentum: f64,
    pub l2_weight_cost: f64,
    pub dropout_fraction: f64,
    /// Masking-noise level for denoising autoencoders.
    pub input_noise_level: f64,
    pub batch_size: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            hidden_units: vec![64],
            activation: Activation::Sigmoid,
            epochs: 30,
            initial_learning_rate: 0.05,
            annealing_delay_fraction: 0.5,
            momentum: 0.9,
            l2_weight_cost: 1e-4,
            dropout_fraction: 0.0,
            input_noise_level: 0.1,
            batch_size: BATCH_SIZE,
        }
    }
}

fn check(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {value} outside [{lo}, {hi}]")))
    }
}

impl Hyperparams {
    pub fn max_epochs(&self) -> usize {
        if self.hidden_units.len() <= 1 {
            MAX_EPOCHS_SHALLOW
        } else {
            MAX_EPOCHS_DEEP
        }
    }

    /// Checks every field against its allowed range.
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units.is_empty() {
            return Err(Error::invalid("at least one hidden layer is required"));
        }
        if let Some(&h) = self.hidden_units.iter().find(|&&h| h == 0 || h > MAX_HIDDEN_UNITS) {
            return Err(Error::invalid(format!("hidden layer of {h} units outside 1..={MAX_HIDDEN_UNITS}")));
        }
        if !(MIN_EPOCHS..=self.max_epochs()).contains(&self.epochs) {
            return Err(Error::invalid(format!(
                "epochs = {} outside [{MIN_EPOCHS}, {}] for {} hidden layer(s)",
                self.epochs,
                self.max_epochs(),
                self.hidden_units.len()
            )));
        }
        check("dropout_fraction", self.dropout_fraction, 0.0, MAX_DROPOUT)?;
        check("annealing_delay_fraction", self.annealing_delay_fraction, 0.0, 1.0)?;
        check("initial_learning_rate", self.initial_learning_rate, LEARNING_RATE_RANGE.0, LEARNING_RATE_RANGE.1)?;
        check("momentum", self.momentum, 0.0, MAX_MOMENTUM)?;
        check("l2_weight_cost", self.l2_weight_cost, 0.0, MAX_L2)?;
        check("input_noise_level", self.input_noise_level, 0.0, MAX_NOISE)?;
        self.check_trainable()
    }

    /// The weaker checks training itself needs: these allow values outside
    /// the search ranges, such as zero epochs or a zero learning rate.
    pub(crate) fn check_trainable(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        for (name, v) in [
            ("initial_learning_rate", self.initial_learning_rate),
            ("momentum", self.momentum),
            ("l2_weight_cost", self.l2_weight_cost),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        check("annealing_delay_fraction", self.annealing_delay_fraction, 0.0, 1.0)?;
        check("dropout_fraction", self.dropout_fraction, 0.0, MAX_DROPOUT)?;
        check("input_noise_level", self.input_noise_level, 0.0, MAX_NOISE)
    }
}
