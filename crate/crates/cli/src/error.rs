use std::path::PathBuf;

use schrolab_experiments::ExperimentError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config file {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: expected `key = value`, got `{text}`", path.display())]
    Syntax {
        path: PathBuf,
        line: usize,
        text: String,
    },
    #[error("{}:{line}: {source}", path.display())]
    Setting {
        path: PathBuf,
        line: usize,
        source: ExperimentError,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Read { .. } | Self::Syntax { .. } | Self::Setting { .. } | Self::Usage(_) => 2,
            Self::Experiment(e) if e.is_config() => 2,
            Self::Experiment(_) | Self::Io(_) => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
