use std::path::PathBuf;

use sopflex_core::study::{ProfileError, StudyError};
use sopflex_core::{DesignError, DispatchError, LossModelError, NetworkError, PowerFlowError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad arguments or environment, detected before any computation.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Profile { path: PathBuf, source: ProfileError },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error(transparent)]
    LossModel(#[from] LossModelError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error("{design}: {source}")]
    Study { design: String, source: StudyError },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable class, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Io { .. } => "io",
            Self::Json { .. } | Self::Format { .. } => "format",
            Self::Profile { .. } => "profile",
            Self::Network(_) => "network",
            Self::Design(_) => "design",
            Self::PowerFlow(_) => "powerflow",
            Self::LossModel(_) => "lossmodel",
            Self::Dispatch(_) => "dispatch",
            Self::Study { .. } => "study",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
