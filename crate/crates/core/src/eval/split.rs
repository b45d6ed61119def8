use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Sizes of `k` near-equal consecutive chunks of `n`, larger chunks first.
fn chunk_sizes(n: usize, k: usize) -> impl Iterator<Item = usize> {
    (0..k).map(move |i| n / k + usize::from(i < n % k))
}

fn partition(perm: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut start = 0;
    chunk_sizes(perm.len(), k)
        .map(|len| {
            let fold = perm[start..start + len].to_vec();
            start += len;
            fold
        })
        .collect()
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));
    perm
}

pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("cannot split {n} rows into {k} folds")));
    }
    Ok(partition(&permutation(n, seed), k))
}

/// Complement of fold `k` within `folds`, in fold order.
pub fn training_indices(folds: &[Vec<usize>], k: usize) -> Vec<usize> {
    folds.iter().enumerate().filter(|(i, _)| *i != k).flat_map(|(_, f)| f.iter().copied()).collect()
}

pub const HOLDOUT_FOLDS: usize = 4;

/// A quarter of the rows held out for testing, the rest in four
/// validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

pub fn holdout_protocol(n: usize, seed: u64) -> Result<SplitPlan> {
    if n < 8 {
        return Err(Error::invalid(format!("holdout protocol needs at least 8 rows, got {n}")));
    }
    let perm = permutation(n, seed);
    // n/4 rounded half up
    let n_test = (n + 2) / 4;
    let (test, rest) = perm.split_at(n_test);
    Ok(SplitPlan { test: test.to_vec(), folds: partition(rest, HOLDOUT_FOLDS), seed })
}
