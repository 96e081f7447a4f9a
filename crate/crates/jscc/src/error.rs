//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A vector length does not match the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An invalid configuration (grid too coarse, bad layer ordering, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A feasibility condition failed; the message names the violated constraint.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The channel-goodness search exhausted its scale grid without meeting
    /// the target escape probability.
    #[error(
        "goodness search saturated: escape rate {rate:.3e} at the largest scale \
         still exceeds the target {pe:.3e}"
    )]
    GoodnessSaturated { pe: f64, rate: f64 },

    /// A layer plan failed validation or deserialization.
    #[error("plan error: {0}")]
    Plan(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub(crate) fn plan(msg: impl Into<String>) -> Self {
        Error::Plan(msg.into())
    }
}
