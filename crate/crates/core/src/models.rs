//! Trainable model families behind one interface, and their model files.
//!
//! A model file is JSON tagged with [`MODEL_VERSION`]. It stores the
//! training spec next to the fitted parameters, so a saved model can be
//! re-fitted fold by fold when it is cross-validated.

use std::path::Path;

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::baseline::{predict_forest, predict_logistic, train_forest, train_logistic, Forest, ForestConfig, LogisticConfig, LogisticModel};
use crate::energy::{dbn_pretrain, dbn_to_network};
use crate::error::{Error, Result};
use crate::eval::{Learner, Scorer};
use crate::features::Dataset;
use crate::neural::{finetune, finetune_network, network_predict, stack_pretrain, Activation, Hyperparams, Network};
use crate::preprocess::{ScaleKind, Scaler};
use crate::rng;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "config", rename_all = "snake_case")]
pub enum ModelSpec {
    Lr(LogisticConfig),
    Rf(ForestConfig),
    Sda(Hyperparams),
    Dbn(Hyperparams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Model {
    Lr(LogisticModel),
    Rf(Forest),
    Sda(Network),
    Dbn(Network),
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Lr(_) => "lr",
            ModelSpec::Rf(_) => "rf",
            ModelSpec::Sda(_) => "sda",
            ModelSpec::Dbn(_) => "dbn",
        }
    }
}

impl Model {
    pub fn predict(&self, x: ArrayView1<f64>) -> Result<f64> {
        match self {
            Model::Lr(m) => predict_logistic(m, x),
            Model::Rf(f) => predict_forest(f, x).map(|p| p.probability),
            Model::Sda(n) | Model::Dbn(n) => network_predict(n, x),
        }
    }
}

impl Scorer for Model {
    fn score(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        match self {
            Model::Lr(m) => m.predict_batch(rows),
            Model::Rf(f) => f.predict_batch(rows),
            Model::Sda(n) | Model::Dbn(n) => n.predict_batch(rows),
        }
    }
}

/// Scales a dataset's rows into [0, 1] with a scaler fitted on it.
fn unit_scaled(train: &Dataset, kind: ScaleKind) -> Result<(Dataset, Scaler)> {
    let scaler = Scaler::fit(kind, train.rows.view());
    let mut scaled = train.clone();
    scaled.rows = scaler.transform(train.rows.view())?;
    Ok((scaled, scaler))
}

/// Stacked denoising autoencoders on standardized, logistic-squashed
/// inputs, then supervised fine-tuning.
pub fn train_sda(train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<Network> {
    let (scaled, scaler) = unit_scaled(train, ScaleKind::Logistic)?;
    let stack = stack_pretrain(scaled.rows.view(), &hp.hidden_units, hp, rng::derive_seed(seed, 1))?;
    let (mut net, trace) = finetune(&stack, &scaled, hp, rng::derive_seed(seed, 2))?;
    log::debug!("SdA fine-tuning loss {:?} -> {:?}", trace.first(), trace.last());
    net.scaler = scaler;
    Ok(net)
}

/// RBM stack on min-max scaled inputs, then fine-tuning of the unrolled
/// sigmoid network. Hidden units are always sigmoid.
pub fn train_dbn(train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<Network> {
    let (scaled, scaler) = unit_scaled(train, ScaleKind::MinMax)?;
    let (dbn, _) = dbn_pretrain(scaled.rows.view(), &hp.hidden_units, hp, rng::derive_seed(seed, 1))?;
    let (mut net, trace) = dbn_to_network(&dbn, &scaled, hp, rng::derive_seed(seed, 2))?;
    log::debug!("DBN fine-tuning loss {:?} -> {:?}", trace.first(), trace.last());
    net.scaler = scaler;
    Ok(net)
}

/// The DBN architecture trained from random weights with the same
/// fine-tuning seed as [`train_dbn`], for pretraining comparisons.
pub fn train_random_network(train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<Network> {
    let (scaled, scaler) = unit_scaled(train, ScaleKind::MinMax)?;
    let fine_seed = rng::derive_seed(seed, 2);
    let mut init_rng = rng::substream(fine_seed, 1);
    let net = Network::random(scaled.n_cols(), &hp.hidden_units, Activation::Sigmoid, hp.dropout_fraction, &mut init_rng);
    let (mut net, _) = finetune_network(net, &scaled, hp, fine_seed)?;
    net.scaler = scaler;
    Ok(net)
}

impl Learner for ModelSpec {
    type Model = Model;

    fn name(&self) -> String {
        self.family().to_string()
    }

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Model> {
        Ok(match self {
            ModelSpec::Lr(cfg) => Model::Lr(train_logistic(train, cfg, seed)?),
            ModelSpec::Rf(cfg) => Model::Rf(train_forest(train, cfg, seed)?),
            ModelSpec::Sda(hp) => Model::Sda(train_sda(train, hp, seed)?),
            ModelSpec::Dbn(hp) => Model::Dbn(train_dbn(train, hp, seed)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub spec: ModelSpec,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub model: Model,
}

impl ModelFile {
    pub fn fit(spec: ModelSpec, train: &Dataset, seed: u64) -> Result<ModelFile> {
        let model = spec.fit(train, seed)?;
        Ok(ModelFile { version: MODEL_VERSION, spec, seed, feature_names: train.feature_names.clone(), model })
    }

    /// Scores `data` after checking it has the training features.
    pub fn score(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.feature_names != self.feature_names {
            return Err(Error::format("dataset", "feature names differ from the model's training features"));
        }
        self.model.score(data.rows.view())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.version != MODEL_VERSION {
            return Err(Error::SchemaVersion { expected: MODEL_VERSION, found: header.version });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelFile::from_json(&text)
    }
}

/// Convenience: scores of `model` for every row of `data`, in row order.
pub fn score_rows(model: &Model, data: ArrayView2<f64>) -> Result<Vec<f64>> {
    data.axis_iter(Axis(0)).map(|x| model.predict(x)).collect()
}
