use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("degree undefined: {0}")]
    Degree(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty sample set")]
    EmptySamples,
}

pub type Result<T> = std::result::Result<T, Error>;
