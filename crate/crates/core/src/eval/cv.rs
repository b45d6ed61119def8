use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auc::auc;
use super::split::{holdout_protocol, kfold_split, training_indices};
use crate::error::Result;
use crate::features::Dataset;
use crate::math::mean;
use crate::rng;

/// A trained model that scores rows; higher means more likely to buy.
pub trait Scorer {
    fn score(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>>;
}

/// A training procedure, deterministic given its seed.
pub trait Learner: Sync {
    type Model: Scorer + Send;
    fn name(&self) -> String;
    fn fit(&self, train: &Dataset, seed: u64) -> Result<Self::Model>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    CrossValidation { k: usize },
    /// 25% test, four models each validated on one of four folds.
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub dataset: String,
    pub protocol: Protocol,
    pub seed: u64,
    /// Mean of `fold_aucs`.
    pub auc: f64,
    /// Held-out fold AUCs under cross-validation; test AUC of each of the
    /// four models under the holdout protocol.
    pub fold_aucs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validation_aucs: Vec<f64>,
}

impl EvalReport {
    pub fn mean_validation_auc(&self) -> Option<f64> {
        (!self.validation_aucs.is_empty()).then(|| mean(&self.validation_aucs))
    }
}

fn dataset_id(d: &Dataset) -> String {
    format!("{}x{}", d.n_rows(), d.n_cols())
}

fn score_auc<M: Scorer>(model: &M, data: &Dataset) -> Result<f64> {
    auc(&model.score(data.rows.view())?, &data.labels)
}

/// Fold `i` trains with seed `derive_seed(seed, i)`.
pub fn cross_validate<L: Learner>(learner: &L, dataset: &Dataset, k: usize, seed: u64) -> Result<EvalReport> {
    let folds = kfold_split(dataset.n_rows(), k, seed)?;
    let fold_aucs: Result<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let model = learner.fit(&dataset.select(&training_indices(&folds, i)), rng::derive_seed(seed, i as u64))?;
            score_auc(&model, &dataset.select(&folds[i]))
        })
        .collect();
    let fold_aucs = fold_aucs?;
    log::info!("{} {k}-fold AUCs {fold_aucs:?}", learner.name());
    Ok(EvalReport {
        model: learner.name(),
        dataset: dataset_id(dataset),
        protocol: Protocol::CrossValidation { k },
        seed,
        auc: mean(&fold_aucs),
        fold_aucs,
        validation_aucs: Vec::new(),
    })
}

/// Trains one model per validation fold and averages their test AUCs.
pub fn holdout_evaluate<L: Learner>(learner: &L, dataset: &Dataset, seed: u64) -> Result<EvalReport> {
    let plan = holdout_protocol(dataset.n_rows(), seed)?;
    let test = dataset.select(&plan.test);
    let pairs: Result<Vec<(f64, f64)>> = (0..plan.folds.len())
        .into_par_iter()
        .map(|i| {
            let train = dataset.select(&training_indices(&plan.folds, i));
            let model = learner.fit(&train, rng::derive_seed(seed, i as u64))?;
            Ok((score_auc(&model, &dataset.select(&plan.folds[i]))?, score_auc(&model, &test)?))
        })
        .collect();
    let (validation_aucs, fold_aucs): (Vec<f64>, Vec<f64>) = pairs?.into_iter().unzip();
    log::info!("{} holdout test AUCs {fold_aucs:?}", learner.name());
    Ok(EvalReport {
        model: learner.name(),
        dataset: dataset_id(dataset),
        protocol: Protocol::Holdout,
        seed,
        auc: mean(&fold_aucs),
        fold_aucs,
        validation_aucs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Axis};

    struct Constant;
    struct Oracle;
    struct FirstColumn;

    impl Scorer for Constant {
        fn score(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
            Ok(vec![0.5; rows.nrows()])
        }
    }
    impl Scorer for FirstColumn {
        fn score(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
            Ok(rows.index_axis(Axis(1), 0).to_vec())
        }
    }

    impl Learner for Constant {
        type Model = Constant;
        fn name(&self) -> String {
            "constant".into()
        }
        fn fit(&self, _: &Dataset, _: u64) -> Result<Constant> {
            Ok(Constant)
        }
    }
    // The label is stored in column 0, so scoring by it is an oracle.
    impl Learner for Oracle {
        type Model = FirstColumn;
        fn name(&self) -> String {
            "oracle".into()
        }
        fn fit(&self, _: &Dataset, _: u64) -> Result<FirstColumn> {
            Ok(FirstColumn)
        }
    }

    fn data(n: usize) -> Dataset {
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let rows = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { f64::from(u8::from(labels[i])) } else { i as f64 });
        Dataset::from_matrix(rows, labels).unwrap()
    }

    #[test]
    fn constant_scores_half() {
        let r = cross_validate(&Constant, &data(100), 10, 4).unwrap();
        assert_eq!(r.fold_aucs, vec![0.5; 10]);
        assert_eq!(r.auc, 0.5);
    }

    #[test]
    fn oracle_scores_one() {
        let r = cross_validate(&Oracle, &data(100), 10, 4).unwrap();
        assert_eq!(r.fold_aucs, vec![1.0; 10]);
        let h = holdout_evaluate(&Oracle, &data(100), 4).unwrap();
        assert_eq!(h.fold_aucs, vec![1.0; 4]);
        assert_eq!(h.mean_validation_auc(), Some(1.0));
    }

    #[test]
    fn report_auc_is_fold_mean() {
        let r = cross_validate(&Constant, &data(60), 3, 1).unwrap();
        assert_eq!(r.auc, mean(&r.fold_aucs));
        assert_eq!(mean(&[0.8, 0.82, 0.78, 0.8]), 0.8);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<EvalReport>(&json).unwrap(), r);
    }
}
