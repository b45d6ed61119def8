//! Exit codes and the JSON error report printed on failure.

use std::fmt;
use std::path::Path;

use clickbuy_core::Error;
use serde::Serialize;

pub type CliResult<T> = Result<T, CliError>;

/// Process exit codes. Usage errors exit with 2, as clap does.
pub mod code {
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const FORMAT: i32 = 4;
    pub const INVALID: i32 = 5;
    pub const DIVERGED: i32 = 6;
    pub const INTERNAL: i32 = 70;
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, kind: &'static str, message: impl Into<String>) -> CliError {
        CliError { code, kind, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> CliError {
        CliError::new(code::IO, "io", format!("{}: {e}", path.display()))
    }

    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::new(code::USAGE, "usage", message)
    }

    pub fn internal(e: impl fmt::Display) -> CliError {
        CliError::new(code::INTERNAL, "internal", e.to_string())
    }

    pub fn report(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind, self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let (code, kind) = match &e {
            Error::Io { .. } | Error::Stream(_) => (code::IO, "io"),
            Error::Json(_) | Error::Format { .. } => (code::FORMAT, "format"),
            Error::SchemaVersion { .. } => (code::FORMAT, "schema_version"),
            Error::Diverged { .. } | Error::AllTrialsDiverged(_) => (code::DIVERGED, "diverged"),
            Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::SingleClass
            | Error::Unbalanceable { .. }
            | Error::UnknownCategory(_)
            | Error::EnumerationTooLarge(..) => (code::INVALID, "invalid"),
        };
        CliError::new(code, kind, e.to_string())
    }
}
