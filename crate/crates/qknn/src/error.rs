//! Error and result types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for dataset handling, simulation, and experiment configuration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A CSV cell failed to parse. Row and column are 1-based; a header row is not counted.
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    /// A CSV row with a different number of fields than the first row.
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    /// Structurally unusable input data (no rows, no feature columns, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A rejected experiment or command-line configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A broken internal invariant. This signals a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}
