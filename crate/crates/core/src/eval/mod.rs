//! AUC, data splits, cross-validation and hyperparameter search.

mod auc;
mod cv;
mod search;
mod split;

pub use auc::auc;
pub use cv::{cross_validate, holdout_evaluate, EvalReport, Learner, Protocol, Scorer};
pub use split::{holdout_protocol, kfold_split, training_indices, SplitPlan, HOLDOUT_FOLDS};
pub use search::{random_search, SearchOutcome, SearchSpace, Trial};
