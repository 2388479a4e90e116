use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must have at least one entry")]
    EmptyVector,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("metric entry {index} is {value}, must be a finite value >= 1e-300")]
    NonPositiveMetric { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("block boundaries do not partition [0, {dim}): {reason}")]
    InvalidPartition { dim: usize, reason: String },

    #[error("group {group} has a non-constant metric; group lasso needs u_j * I within each group")]
    NonUniformGroupMetric { group: usize },

    #[error("simplex bisection did not converge after {iterations} iterations (bracket [{lo}, {hi}], residual {residual:e})")]
    BisectionFailed {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("line search failed at iteration {iter} after {backtracks} backtracks (F(x+) = {trial_objective:e}, reference {reference:e}, u_max = {u_max:e})")]
    LineSearchFailure {
        iter: usize,
        backtracks: usize,
        trial_objective: f64,
        reference: f64,
        u_max: f64,
    },

    #[error("objective evaluated to a non-finite value at iteration {iter}")]
    NonFiniteObjective { iter: usize },

    #[error("{path}: row {row}, column {column}: {reason}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        reason: String,
    },

    #[error("{path}: {reason}")]
    EmptyData { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
