use thiserror::Error;

/// Errors raised by the histories toolkit.
///
/// Variants split into two families: malformed input (bad shapes, invariants
/// that the caller is responsible for) and numeric failures inside the kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: max asymmetry {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },

    #[error("invalid tolerance {0}: must be finite and positive")]
    InvalidTolerance(f64),

    #[error("invalid projector decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("invalid density state: {0}")]
    InvalidState(String),

    #[error("invalid event schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid phase kick: {0}")]
    InvalidKick(String),

    #[error("invalid search spec: {0}")]
    InvalidSearch(String),

    #[error("negative probability {value:e} for history {history}")]
    NegativeProbability { history: String, value: f64 },

    #[error("family of {size} histories exceeds the brute-force limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by the input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
