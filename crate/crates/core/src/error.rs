use alloc::string::String;

use crate::lp::LpStatus;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("point ({x}, {y}) lies outside the terrain bounds")]
    OutOfDomain { x: f64, y: f64 },

    #[error("normal equations are numerically singular (smallest eigenvalue estimate {smallest_eigenvalue:e})")]
    Conditioning { smallest_eigenvalue: f64 },

    #[error("contract violation: {0}")]
    Contract(&'static str),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("linear program did not reach optimality (status: {0:?})")]
    NotOptimal(LpStatus),

    #[error("no path between start and goal")]
    NoPath,
}
