use std::path::PathBuf;

use rnstpu_core::RnsError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Io = 1,
    Validation = 2,
    Capacity = 3,
    OracleMismatch = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Rns(#[from] RnsError),
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0} mismatches against the oracle")]
    OracleMismatch(usize),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Error::Io { .. } => ExitCode::Io,
            Error::Rns(RnsError::CapacityViolation(_) | RnsError::OutOfRange) => ExitCode::Capacity,
            Error::Rns(_) | Error::Csv { .. } | Error::Config(_) | Error::Invalid(_) => {
                ExitCode::Validation
            }
            Error::OracleMismatch(_) => ExitCode::OracleMismatch,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
