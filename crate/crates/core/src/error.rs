use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unreadable input stream: {0}")]
    Stream(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed file {what}: {reason}")]
    Format { what: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A training run produced a non-finite loss. Search treats this as a
    /// constraint violation rather than a hard failure.
    #[error("training diverged in {stage} at epoch {epoch}")]
    Diverged { stage: &'static str, epoch: usize },

    #[error("labels contain a single class; need at least one positive and one negative")]
    SingleClass,

    #[error("cannot balance: {positives} positives exceed {negatives} negatives")]
    Unbalanceable { positives: usize, negatives: usize },

    #[error("unknown category id {0:?}")]
    UnknownCategory(String),

    #[error("enumeration guard exceeded: n_visible + n_hidden = {0} > {1}")]
    EnumerationTooLarge(usize, usize),

    #[error("schema version mismatch: file has {found}, expected {expected}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("every search trial diverged ({0} trials)")]
    AllTrialsDiverged(usize),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format { what: what.into(), reason: reason.into() }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
