//! Labeled feature matrices and their on-disk form.
//!
//! A dataset is stored as two files. The matrix file holds, little-endian:
//!
//! ```text
//! magic   b"CBDS"
//! version u32
//! n_rows  u64
//! n_cols  u64
//! values  n_rows * n_cols f64, row-major
//! labels  n_rows u8 (1 = buy, 0 = non-buy)
//! ```
//!
//! The JSON sidecar at `<path>.json` carries feature names, row ids and
//! provenance. Both files are written deterministically, so identical
//! datasets produce identical bytes.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SessionStore;
use crate::rng;

use super::{Aggregation, Fragment, SessionFeatures, SCALAR_FEATURES};

pub const DATASET_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"CBDS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub aggregation: Aggregation,
    pub category_count: usize,
    #[serde(default)]
    pub balance_seed: Option<u64>,
    #[serde(default)]
    pub nmf_rank: Option<usize>,
    #[serde(default)]
    pub nmf_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Array2<f64>,
    pub labels: Vec<bool>,
    pub feature_names: Vec<String>,
    /// Source session id of each row.
    pub row_ids: Vec<String>,
    pub meta: DatasetMeta,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    version: u32,
    n_rows: usize,
    n_cols: usize,
    feature_names: Vec<String>,
    row_ids: Vec<String>,
    #[serde(flatten)]
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(
        rows: Array2<f64>,
        labels: Vec<bool>,
        feature_names: Vec<String>,
        row_ids: Vec<String>,
        meta: DatasetMeta,
    ) -> Result<Dataset> {
        let ds = Dataset { rows, labels, feature_names, row_ids, meta };
        ds.validate()?;
        Ok(ds)
    }

    /// A dataset with generated names and ids, mostly for tests and toy data.
    pub fn from_matrix(rows: Array2<f64>, labels: Vec<bool>) -> Result<Dataset> {
        let names = (0..rows.ncols()).map(|j| format!("x{j}")).collect();
        let ids = (0..rows.nrows()).map(|i| format!("r{i}")).collect();
        let meta = DatasetMeta {
            aggregation: Aggregation::Weekly,
            category_count: 0,
            balance_seed: None,
            nmf_rank: None,
            nmf_seed: None,
        };
        Dataset::new(rows, labels, names, ids, meta)
    }

    fn validate(&self) -> Result<()> {
        if self.labels.len() != self.rows.nrows() {
            return Err(Error::DimensionMismatch { expected: self.rows.nrows(), found: self.labels.len() });
        }
        if self.row_ids.len() != self.rows.nrows() {
            return Err(Error::DimensionMismatch { expected: self.rows.nrows(), found: self.row_ids.len() });
        }
        if self.feature_names.len() != self.rows.ncols() {
            return Err(Error::DimensionMismatch { expected: self.rows.ncols(), found: self.feature_names.len() });
        }
        if self.rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.ncols()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: self.rows.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Names of columns holding a single value across all rows.
    pub fn constant_columns(&self) -> Vec<String> {
        if self.n_rows() == 0 {
            return Vec::new();
        }
        self.rows
            .axis_iter(Axis(1))
            .zip(&self.feature_names)
            .filter(|(col, _)| col.iter().all(|&v| v == col[0]))
            .map(|(_, name)| name.clone())
            .collect()
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        w.write_all(&(self.n_cols() as u64).to_le_bytes())?;
        for v in self.rows.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        let labels: Vec<u8> = self.labels.iter().map(|&l| u8::from(l)).collect();
        w.write_all(&labels)?;
        w.flush()?;
        Ok(())
    }

    fn read_binary<R: Read>(mut r: R) -> Result<(Array2<f64>, Vec<bool>)> {
        let bad = |reason: &str| Error::format("dataset matrix", reason);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != DATASET_VERSION {
            return Err(Error::SchemaVersion { expected: DATASET_VERSION, found: version });
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let d = u64::from_le_bytes(b8) as usize;
        let mut values = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        let mut labels = vec![0u8; n];
        r.read_exact(&mut labels)?;
        if labels.iter().any(|&l| l > 1) {
            return Err(bad("label byte other than 0/1"));
        }
        let rows = Array2::from_shape_vec((n, d), values).map_err(|e| bad(&e.to_string()))?;
        Ok((rows, labels.into_iter().map(|l| l == 1).collect()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(std::io::BufWriter::new(f))?;
        let side = Sidecar {
            version: DATASET_VERSION,
            n_rows: self.n_rows(),
            n_cols: self.n_cols(),
            feature_names: self.feature_names.clone(),
            row_ids: self.row_ids.clone(),
            meta: self.meta.clone(),
        };
        let side_path = Dataset::sidecar_path(path);
        let mut json = serde_json::to_vec_pretty(&side)?;
        json.push(b'\n');
        std::fs::write(&side_path, json).map_err(|e| Error::io(side_path, e))
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let (rows, labels) = Dataset::read_binary(std::io::BufReader::new(f))?;
        let side_path = Dataset::sidecar_path(path);
        let text = std::fs::read(&side_path).map_err(|e| Error::io(&side_path, e))?;
        let side: Sidecar = serde_json::from_slice(&text)?;
        if side.version != DATASET_VERSION {
            return Err(Error::SchemaVersion { expected: DATASET_VERSION, found: side.version });
        }
        if side.n_rows != rows.nrows() || side.n_cols != rows.ncols() {
            return Err(Error::format("dataset sidecar", "shape disagrees with matrix file"));
        }
        Dataset::new(rows, labels, side.feature_names, side.row_ids, side.meta)
    }
}

/// Concatenates scalar features, description vectors and aggregation
/// columns row by row; labels come from the store.
pub fn assemble_dataset(
    store: &SessionStore,
    features: &[SessionFeatures],
    fragment: &Fragment,
    aggregation: Aggregation,
    category_count: usize,
) -> Result<Dataset> {
    let n = store.len();
    if features.len() != n || fragment.row_ids.len() != n {
        return Err(Error::invalid(format!(
            "row universes differ: store {n}, features {}, fragment {}",
            features.len(),
            fragment.row_ids.len()
        )));
    }
    let desc_dim = features.first().map_or(0, |f| f.desc_vector.len());
    let mut names: Vec<String> = SCALAR_FEATURES.iter().map(|s| s.to_string()).collect();
    names.extend((0..desc_dim).map(|k| format!("desc_{k}")));
    names.extend(fragment.names.iter().cloned());
    let d = names.len();

    let mut rows = Array2::<f64>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    for (i, (session, f)) in store.sessions().zip(features).enumerate() {
        if f.session_id != session.session_id || fragment.row_ids[i] != session.session_id {
            return Err(Error::invalid(format!("row {i} does not line up across inputs")));
        }
        if f.desc_vector.len() != desc_dim {
            return Err(Error::DimensionMismatch { expected: desc_dim, found: f.desc_vector.len() });
        }
        let mut row = rows.row_mut(i);
        let agg = fragment.values.row(i);
        let values = f.scalars().into_iter().chain(f.desc_vector.iter().copied()).chain(agg.iter().copied());
        for (slot, v) in row.iter_mut().zip(values) {
            *slot = v;
        }
        labels.push(session.is_buy());
        ids.push(session.session_id.clone());
    }
    let meta = DatasetMeta { aggregation, category_count, balance_seed: None, nmf_rank: None, nmf_seed: None };
    Dataset::new(rows, labels, names, ids, meta)
}

/// Keeps every positive, subsamples negatives without replacement down to
/// the positive count, then shuffles the rows. Deterministic in `seed`.
pub fn balance(dataset: &Dataset, seed: u64) -> Result<Dataset> {
    let pos: Vec<usize> = (0..dataset.n_rows()).filter(|&i| dataset.labels[i]).collect();
    let neg: Vec<usize> = (0..dataset.n_rows()).filter(|&i| !dataset.labels[i]).collect();
    if pos.is_empty() {
        return Err(Error::invalid("dataset has no positive rows to balance against"));
    }
    if pos.len() > neg.len() {
        return Err(Error::Unbalanceable { positives: pos.len(), negatives: neg.len() });
    }
    let mut rng = rng::seeded(seed);
    let mut chosen: Vec<usize> = pos.clone();
    let picked: HashSet<usize> = index::sample(&mut rng, neg.len(), pos.len()).into_iter().collect();
    chosen.extend(neg.iter().enumerate().filter(|(k, _)| picked.contains(k)).map(|(_, &i)| i));
    chosen.shuffle(&mut rng);
    let mut out = dataset.select(&chosen);
    out.meta.balance_seed = Some(seed);
    Ok(out)
}
