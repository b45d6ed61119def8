use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::features::Dataset;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Features drawn per split; `None` means `⌈√d⌉`.
    pub mtry: Option<usize>,
    /// Minimum samples in each child of a split.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { mtry: None, min_leaf: 1 }
    }
}

pub(crate) fn default_mtry(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
}

impl TreeConfig {
    pub(crate) fn resolve_mtry(&self, d: usize) -> Result<usize> {
        let m = self.mtry.unwrap_or_else(|| default_mtry(d));
        if m == 0 || m > d {
            return Err(Error::invalid(format!("mtry {m} outside 1..={d}")));
        }
        if self.min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left. Children are arena indices.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { negatives: usize, positives: usize, probability: f64 },
}

/// Unpruned classification tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(&self, x: ArrayView1<f64>) -> &TreeNode {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict_proba(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.n_features, x.len())?;
        match self.leaf(x) {
            TreeNode::Leaf { probability, .. } => Ok(*probability),
            TreeNode::Split { .. } => unreachable!("walk ends at a leaf"),
        }
    }

    pub fn predict_class(&self, x: ArrayView1<f64>) -> Result<bool> {
        Ok(self.predict_proba(x)? >= 0.5)
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }
}

fn gini(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = pos as f64 / n;
    2.0 * p * (1.0 - p)
}

struct Best {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

/// Lowest weighted child impurity over midpoints of `feature` within `idx`.
fn best_threshold(x: ArrayView2<f64>, y: &[bool], idx: &[usize], feature: usize, min_leaf: usize) -> Option<Best> {
    let mut vals: Vec<(f64, bool)> = idx.iter().map(|&i| (x[[i, feature]], y[i])).collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = vals.len();
    let total_pos = vals.iter().filter(|v| v.1).count();
    let mut left_pos = 0;
    let mut best: Option<Best> = None;
    for k in 1..n {
        left_pos += usize::from(vals[k - 1].1);
        let (a, b) = (vals[k - 1].0, vals[k].0);
        if a == b || k < min_leaf || n - k < min_leaf {
            continue;
        }
        let right_pos = total_pos - left_pos;
        let imp = (k as f64 * gini(k - left_pos, left_pos) + (n - k) as f64 * gini(n - k - right_pos, right_pos))
            / n as f64;
        if best.as_ref().is_none_or(|b| imp < b.impurity) {
            let mut t = a + (b - a) / 2.0;
            if t >= b {
                t = a;
            }
            best = Some(Best { impurity: imp, feature, threshold: t });
        }
    }
    best
}

fn choose_split(
    x: ArrayView2<f64>,
    y: &[bool],
    idx: &[usize],
    mtry: usize,
    min_leaf: usize,
    rng: &mut rng::Rng,
) -> Option<Best> {
    let d = x.ncols();
    let mut drawn = index::sample(rng, d, mtry).into_vec();
    drawn.sort_unstable();
    let pick = |features: &mut dyn Iterator<Item = usize>| {
        let mut best: Option<Best> = None;
        for f in features {
            if let Some(c) = best_threshold(x, y, idx, f, min_leaf) {
                if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                    best = Some(c);
                }
            }
        }
        best
    };
    // Drawn features that are constant on this node cannot split it; the
    // remaining ones are tried before giving up.
    pick(&mut drawn.iter().copied()).or_else(|| pick(&mut (0..d).filter(|f| drawn.binary_search(f).is_err())))
}

/// Grows a tree on the rows of `x` listed in `idx` (repeats allowed).
pub(crate) fn grow(
    x: ArrayView2<f64>,
    y: &[bool],
    idx: Vec<usize>,
    mtry: usize,
    min_leaf: usize,
    rng: &mut rng::Rng,
) -> Result<Tree> {
    if idx.is_empty() {
        return Err(Error::invalid("cannot grow a tree on an empty sample"));
    }
    let mut nodes = vec![TreeNode::Leaf { negatives: 0, positives: 0, probability: 0.0 }];
    let mut work = vec![(0usize, idx)];
    while let Some((slot, idx)) = work.pop() {
        let pos = idx.iter().filter(|&&i| y[i]).count();
        let neg = idx.len() - pos;
        let split = if pos == 0 || neg == 0 { None } else { choose_split(x, y, &idx, mtry, min_leaf, rng) };
        match split {
            None => {
                nodes[slot] =
                    TreeNode::Leaf { negatives: neg, positives: pos, probability: pos as f64 / idx.len() as f64 };
            }
            Some(best) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| x[[i, best.feature]] <= best.threshold);
                debug_assert!(!l.is_empty() && !r.is_empty());
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { negatives: 0, positives: 0, probability: 0.0 });
                nodes.push(TreeNode::Leaf { negatives: 0, positives: 0, probability: 0.0 });
                nodes[slot] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left, right: left + 1 };
                work.push((left + 1, r));
                work.push((left, l));
            }
        }
    }
    Ok(Tree { n_features: x.ncols(), nodes })
}

/// Gini tree grown to purity on the whole sample, no bootstrap.
pub fn train_tree(sample: &Dataset, cfg: &TreeConfig, seed: u64) -> Result<Tree> {
    let mtry = cfg.resolve_mtry(sample.n_cols())?;
    let mut rng = rng::seeded(seed);
    grow(sample.rows.view(), &sample.labels, (0..sample.n_rows()).collect(), mtry, cfg.min_leaf, &mut rng)
}
