use thiserror::Error;

use crate::bath::BathError;
use crate::cli::ConfigError;
use crate::dynamics::DynamicsError;
use crate::eigen::EigenError;
use crate::experiments::ExperimentError;
use crate::model::ModelError;
use crate::polaron::PolaronError;

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    /// Invalid input, configuration or precondition.
    Config,
    /// A numerical routine failed to converge.
    Numeric,
    /// A degenerate spectrum broke the secular approximation.
    Secular,
    /// Reading or writing files failed.
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Numeric => 3,
            ErrorCategory::Secular => 4,
            ErrorCategory::Io => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Numeric => "numeric",
            ErrorCategory::Secular => "secular",
            ErrorCategory::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Polaron(#[from] PolaronError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Model(_) | Error::Config(_) => ErrorCategory::Config,
            Error::Eigen(e) => e.category(),
            Error::Bath(e) => e.category(),
            Error::Dynamics(e) => e.category(),
            Error::Polaron(e) => e.category(),
            Error::Experiment(e) => e.category(),
            Error::Io { .. } => ErrorCategory::Io,
        }
    }
}
