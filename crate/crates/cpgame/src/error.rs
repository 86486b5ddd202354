use std::io;

use cpgame_core::CpError;

/// Failures surfaced by the command-line tool, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Format(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Infeasible(_) => 2,
            AppError::Io { .. } | AppError::Format(_) => 3,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        AppError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<CpError> for AppError {
    fn from(e: CpError) -> Self {
        match e {
            CpError::InsufficientHeadroom { .. } | CpError::InfeasibleAction { .. } => {
                AppError::Infeasible(e.to_string())
            }
            other => AppError::Validation(other.to_string()),
        }
    }
}
