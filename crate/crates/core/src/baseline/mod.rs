//! Logistic regression and random-forest baselines.

mod forest;
mod logistic;
mod tree;

pub use forest::{predict_forest, train_forest, Forest, ForestConfig, ForestPrediction};
pub use logistic::{
    logistic_gradient, logistic_loss, predict_logistic, train_logistic, train_logistic_traced, LogisticConfig,
    LogisticModel,
};
pub use tree::{train_tree, Tree, TreeConfig, TreeNode};
