use thiserror::Error;

use crate::solver::SolverTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed CSR matrix: {0}")]
    MalformedMatrix(String),

    #[error("line {line}: {message} (token {token:?})")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },

    #[error("diverged at iteration {iteration}: F = {value}")]
    Diverged {
        iteration: usize,
        value: f64,
        partial: Box<SolverTrace>,
    },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
