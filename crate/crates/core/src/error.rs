//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix failed Bell-matrix validation.
    #[error(transparent)]
    BellMatrix(#[from] BellMatrixError),

    /// The operation would exceed a configured enumeration or size cap.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A numerical routine failed to converge or produced inconsistent data.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The operation is defined only on a restricted domain.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Reasons a square matrix is rejected as a Bell matrix. Each violated
/// defining condition gets its own variant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BellMatrixError {
    #[error("matrix is {rows}x{cols}, expected square of size >= 2")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry ({row},{col}) is {value}, expected exactly -1, 0, or +1")]
    BadEntry {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("row {index} has {count} nonzero entries, expected exactly 2")]
    RowSupport { index: usize, count: usize },

    #[error("column {index} has {count} nonzero entries, expected exactly 2")]
    ColSupport { index: usize, count: usize },

    #[error("support pattern splits into {components} disjoint blocks, expected a single irreducible one")]
    Reducible { components: usize },

    #[error("matrix has {count} entries equal to -1, expected an odd number")]
    EvenMinusCount { count: usize },
}
