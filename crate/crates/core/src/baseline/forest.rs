use ndarray::{ArrayView1, ArrayView2};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Tree, TreeConfig};
use crate::error::{check_dim, Error, Result};
use crate::features::Dataset;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, tree: TreeConfig::default(), bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub mtry: usize,
    pub seed: u64,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestPrediction {
    /// Mean of the trees' leaf buy probabilities.
    pub probability: f64,
    /// Majority vote of the trees; a tie counts as non-buy.
    pub buy: bool,
}

impl Forest {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    pub fn predict_batch(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_dim(self.n_features(), rows.ncols())?;
        let out: Result<Vec<f64>> =
            (0..rows.nrows()).into_par_iter().map(|i| predict_forest(self, rows.row(i)).map(|p| p.probability)).collect();
        out
    }
}

/// Tree `t` draws its bootstrap and feature subsets from substream `t` of
/// `seed`, so the forest does not depend on thread scheduling.
pub fn train_forest(train: &Dataset, cfg: &ForestConfig, seed: u64) -> Result<Forest> {
    if cfg.n_trees == 0 {
        return Err(Error::invalid("a forest needs at least one tree"));
    }
    let mtry = cfg.tree.resolve_mtry(train.n_cols())?;
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::invalid("cannot grow a tree on an empty sample"));
    }
    let x = train.rows.view();
    let trees: Result<Vec<Tree>> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::substream(seed, t as u64);
            let idx: Vec<usize> =
                if cfg.bootstrap { (0..n).map(|_| r.random_range(0..n)).collect() } else { (0..n).collect() };
            grow(x, &train.labels, idx, mtry, cfg.tree.min_leaf, &mut r)
        })
        .collect();
    Ok(Forest { trees: trees?, mtry, seed, bootstrap: cfg.bootstrap })
}

pub fn predict_forest(forest: &Forest, x: ArrayView1<f64>) -> Result<ForestPrediction> {
    check_dim(forest.n_features(), x.len())?;
    let mut sum = 0.0;
    let mut votes = 0usize;
    for tree in &forest.trees {
        let p = tree.predict_proba(x)?;
        sum += p;
        votes += usize::from(p >= 0.5);
    }
    let n = forest.trees.len();
    Ok(ForestPrediction { probability: sum / n as f64, buy: 2 * votes > n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{train_tree, TreeNode};
    use crate::eval::auc;
    use ndarray::{array, Array2};

    fn stump(p: f64) -> Tree {
        Tree { n_features: 1, nodes: vec![TreeNode::Leaf { negatives: 0, positives: 0, probability: p }] }
    }

    fn forest_of(ps: &[f64]) -> Forest {
        Forest { trees: ps.iter().map(|&p| stump(p)).collect(), mtry: 1, seed: 0, bootstrap: true }
    }

    fn noisy(n: usize, seed: u64) -> Dataset {
        let mut r = rng::seeded(seed);
        let rows = Array2::from_shape_simple_fn((n, 4), || r.random::<f64>());
        let labels = rows.rows().into_iter().map(|x| x[0] + 0.3 * r.random::<f64>() > 0.6).collect();
        Dataset::from_matrix(rows, labels).unwrap()
    }

    #[test]
    fn votes_and_means() {
        let x = array![0.0];
        let p = predict_forest(&forest_of(&[1.0, 0.9, 0.2]), x.view()).unwrap();
        assert!(p.buy);
        let p = predict_forest(&forest_of(&[1.0, 0.0]), x.view()).unwrap();
        assert_eq!(p.probability, 0.5);
        assert!(!p.buy);
        assert!(predict_forest(&forest_of(&[1.0]), array![0.0, 1.0].view()).is_err());
    }

    #[test]
    fn single_tree_forest_is_the_tree() {
        let d = noisy(80, 1);
        let tree_cfg = TreeConfig { mtry: Some(4), min_leaf: 1 };
        let f = train_forest(&d, &ForestConfig { n_trees: 1, tree: tree_cfg, bootstrap: false }, 3).unwrap();
        let t = train_tree(&d, &tree_cfg, 3).unwrap();
        let probe = noisy(30, 2);
        for x in probe.rows.rows() {
            assert_eq!(predict_forest(&f, x).unwrap().probability, t.predict_proba(x).unwrap());
        }
    }

    #[test]
    fn separable_training_auc_is_one() {
        let mut r = rng::seeded(8);
        let rows = Array2::from_shape_simple_fn((60, 2), || r.random_range(-1.0..1.0));
        let labels: Vec<bool> = rows.rows().into_iter().map(|x| x[0] + x[1] > 0.0).collect();
        let d = Dataset::from_matrix(rows, labels.clone()).unwrap();
        let f = train_forest(&d, &ForestConfig { n_trees: 50, ..Default::default() }, 4).unwrap();
        assert_eq!(auc(&f.predict_batch(d.rows.view()).unwrap(), &labels).unwrap(), 1.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let d = noisy(200, 5);
        let cfg = ForestConfig { n_trees: 20, ..Default::default() };
        let a = train_forest(&d, &cfg, 42).unwrap();
        let b = train_forest(&d, &cfg, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict_batch(d.rows.view()).unwrap(), b.predict_batch(d.rows.view()).unwrap());
        assert_ne!(train_forest(&d, &cfg, 43).unwrap(), a);
    }

    #[test]
    fn duplicated_trees_keep_votes() {
        let d = noisy(150, 6);
        let f = train_forest(&d, &ForestConfig { n_trees: 7, ..Default::default() }, 1).unwrap();
        let mut doubled = f.clone();
        doubled.trees.extend(f.trees.iter().cloned());
        doubled.trees.extend(f.trees.iter().cloned());
        for x in noisy(100, 7).rows.rows() {
            let (a, b) = (predict_forest(&f, x).unwrap(), predict_forest(&doubled, x).unwrap());
            assert_eq!(a.buy, b.buy);
            assert!((0.0..=1.0).contains(&a.probability));
        }
    }

    #[test]
    fn zero_trees_rejected() {
        let d = noisy(10, 0);
        assert!(train_forest(&d, &ForestConfig { n_trees: 0, ..Default::default() }, 0).is_err());
    }
}
