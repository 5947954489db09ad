//! Failures of the command-line front end and their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration is malformed or names a meaningless case.
    #[error("invalid config: {0}")]
    Config(String),
    /// The case is meaningful but outside what the engine evaluates.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A numerical routine did not converge.
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::NonConvergence(_) => 4,
        }
    }
}

impl From<harq_csi::Error> for CliError {
    fn from(e: harq_csi::Error) -> Self {
        match e {
            harq_csi::Error::Domain(m) => CliError::Config(m),
            harq_csi::Error::Unsupported(m) => CliError::Unsupported(m),
            harq_csi::Error::NonConvergence(m) => CliError::NonConvergence(m),
        }
    }
}
