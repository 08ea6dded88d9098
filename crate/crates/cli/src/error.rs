use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qdho::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {}", .0.display(), .1)]
    Io(PathBuf, #[source] io::Error),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Core(e) => match e {
                qdho::Error::Constraint(_)
                | qdho::Error::Config(_)
                | qdho::Error::InvalidSampling(_)
                | qdho::Error::Dimension { .. }
                | qdho::Error::TimeOutOfRange { .. } => 2,
                qdho::Error::LeakageExceeded { .. } => 4,
                _ => 3,
            },
            CliError::Config(_) => 2,
            CliError::VerifyFailed(_) => 3,
            CliError::Io(..) => 1,
        })
    }
}
