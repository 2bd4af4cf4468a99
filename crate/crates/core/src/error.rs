//! Error types shared across the toolkit.

use thiserror::Error;

/// Coarse classification used by callers (e.g. the CLI exit-code contract).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: dimension mismatches, invalid values, malformed files.
    Input,
    /// Numerical trouble: failed decompositions, non-convergence, degenerate data.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("csv error at {location}: {message}")]
    Csv { location: String, message: String },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(
        "solver did not converge within {iterations} pair updates (KKT residual {residual:.3e})"
    )]
    Convergence {
        iterations: u64,
        residual: f64,
        /// Best dual iterate reached before giving up.
        best_alpha: Vec<f64>,
    },

    #[error("diagnostic failed: {0}")]
    Diagnostic(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Buckets every variant into the input-vs-numerical dichotomy the CLI
    /// exit codes are built on.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::EmptyInput(_)
            | Error::InvalidParameter(_)
            | Error::InvalidDataset(_)
            | Error::Csv { .. }
            | Error::ModelFile(_)
            | Error::Io(_) => ErrorKind::Input,
            Error::DegenerateData(_)
            | Error::Numerical(_)
            | Error::Convergence { .. }
            | Error::Diagnostic(_)
            | Error::Experiment(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
