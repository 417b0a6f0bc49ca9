//! Runner errors mapped onto process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration or arguments (exit 1).
    #[error("{0}")]
    Config(String),
    /// A pipeline operation failed at runtime (exit 2); the message names
    /// the failing operation.
    #[error("{operation}: {source}")]
    Pipeline {
        operation: String,
        source: pdp_core::Error,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn pipeline(operation: impl Into<String>, source: pdp_core::Error) -> Self {
        CliError::Pipeline {
            operation: operation.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Pipeline { .. } | CliError::Io(_) => 2,
        }
    }
}
