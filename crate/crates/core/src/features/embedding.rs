//! Word-vector lookup for item descriptions.
//!
//! Table format: one token per line, tab separated, token then `dim` floats.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

pub const EMBEDDING_DIM: usize = 50;

const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "has", "in", "is", "it",
    "its", "of", "on", "or", "that", "the", "this", "to", "was", "were", "will", "with",
];

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    stopwords: HashSet<String>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> EmbeddingTable {
        EmbeddingTable {
            dim,
            entries: HashMap::new(),
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        self.entries.insert(token.to_lowercase(), vector);
        Ok(())
    }

    pub fn set_stopwords<I, S>(&mut self, words: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn read_tsv<R: BufRead>(reader: R, dim: usize) -> Result<EmbeddingTable> {
        let mut table = EmbeddingTable::new(dim);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default();
            let vector = cols
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::format("embedding table", format!("line {}: {e}", idx + 1)))?;
            if vector.len() != dim {
                return Err(Error::format(
                    "embedding table",
                    format!("line {}: expected {} columns, found {}", idx + 1, dim + 1, vector.len() + 1),
                ));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::format("embedding table", format!("line {}: non-finite value", idx + 1)));
            }
            table.insert(token, vector)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path, dim: usize) -> Result<EmbeddingTable> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        EmbeddingTable::read_tsv(std::io::BufReader::new(f), dim)
    }

    /// Writes the table sorted by token.
    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let mut tokens: Vec<&String> = self.entries.keys().collect();
        tokens.sort();
        for t in tokens {
            write!(w, "{t}")?;
            for v in &self.entries[t] {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Mean vector of the in-vocabulary, non-stopword tokens; zero if none.
pub fn embed_description(text: &str, table: &EmbeddingTable) -> Vec<f64> {
    let mut acc = vec![0.0; table.dim];
    let mut n = 0usize;
    for tok in tokenize(text) {
        if table.stopwords.contains(&tok) {
            continue;
        }
        if let Some(v) = table.get(&tok) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
    }
    acc
}
