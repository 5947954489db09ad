//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The request is well defined but not supported by this implementation.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An iterative solver failed to meet its tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn unsupported(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}
