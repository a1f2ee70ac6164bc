//! Error type shared across the toolkit.

use thiserror::Error;

/// Toolkit-wide error type.
///
/// Variants are grouped by how a front end should treat them: `Usage`,
/// `Parse`, `Structure` and `Geometry` indicate bad inputs (exit code 2 in
/// the CLI), everything else is a runtime or algorithmic failure (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    /// A text input could not be parsed (bad token, missing key, truncation).
    #[error("parse error: {0}")]
    Parse(String),
    /// Input parsed but its structure is inconsistent (counts, dimensions).
    #[error("structural error: {0}")]
    Structure(String),
    /// Two grids that must share a geometry do not.
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    /// Not enough valid samples/pixels to run an operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Degenerate numeric input (zero spread, empty range).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An iterative algorithm failed to make progress.
    #[error("divergence: {0}")]
    Divergence(String),
    /// The caller invoked an operation outside its contract.
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Parse(_) | Error::Structure(_) | Error::Geometry(_) | Error::Usage(_) => true,
            Error::Io(e) => e.kind() == std::io::ErrorKind::NotFound,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
