use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] schrolab_core::Error),
    #[error("invalid setting `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("`{kind}` cannot run here: {reason}")]
    Mismatch { kind: String, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

pub(crate) fn config_err(key: &str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

pub(crate) fn mismatch(kind: impl ToString, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Mismatch {
        kind: kind.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentError {
    /// Whether the error comes from the configuration rather than the run.
    pub fn is_config(&self) -> bool {
        use schrolab_core::Error as E;
        match self {
            Self::Config { .. } | Self::Mismatch { .. } => true,
            Self::Core(e) => matches!(
                e,
                E::BadDimension(_)
                    | E::BadResolution(_)
                    | E::BadBoxLength(_)
                    | E::InvalidParameter { .. }
                    | E::NegativePotential { .. }
                    | E::TooLarge { .. }
                    | E::EmptyMask
                    | E::HeightTooLow { .. }
                    | E::Parse { .. }
            ),
            Self::Io(_) | Self::Csv(_) => false,
        }
    }
}
