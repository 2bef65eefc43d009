use thiserror::Error;

use crate::glm::Family;

#[derive(Debug, Error)]
pub enum Error {
    /// Natural parameter outside the range a family can evaluate safely.
    #[error("{family} log-partition overflow guard exceeded at z = {z}")]
    Range { family: Family, z: f64 },

    /// A caller broke a precondition (dimension mismatch, empty data, bad parameter).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Exact dropout enumeration was asked for a support that is too large.
    #[error("row {row} has {support} active features; exact enumeration is capped at {max} (use the Monte Carlo objective instead)")]
    Capacity { row: usize, support: usize, max: usize },

    /// The optimizer met a non-finite objective or gradient.
    #[error("objective is not finite at beta = {beta:?}")]
    NonFinite { beta: Vec<f64> },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
