//! Purchase-intent prediction from clickstream sessions.
//!
//! The crate covers the whole modelling path: ingesting raw event logs into
//! labeled sessions, engineering session features, compressing category
//! counts with non-negative matrix factorization, the logistic-regression and
//! random-forest baselines, deep belief networks built from RBMs, stacked
//! denoising autoencoders, and the AUC-based evaluation protocols. A seeded
//! generator produces clickstreams with a planted buy-intent signal.

pub mod baseline;
pub mod energy;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod math;
pub mod models;
pub mod neural;
pub mod nmf;
pub mod preprocess;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
