use std::io;

use thiserror::Error;

pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] debias_core::Error),

    /// Missing or contradictory settings.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Unreadable or malformed input data.
    #[error("{0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(debias_core::Error::ResourceExceeded(_)) => EXIT_RESOURCE,
            CliError::Core(_) | CliError::Config(_) => EXIT_DOMAIN,
            CliError::Input(_) | CliError::Io(_) => EXIT_IO,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
