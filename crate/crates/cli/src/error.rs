use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{stage}: {source}")]
    Core {
        stage: String,
        #[source]
        source: ncca_core::Error,
    },

    #[error("{0}")]
    Acceptance(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core { source, .. } if source.is_numerical() => 3,
            CliError::Core { .. } => 2,
            CliError::Acceptance(_) => 4,
        }
    }
}

/// Attaches a stage name to library errors.
pub trait Stage<T> {
    fn stage(self, stage: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Stage<T> for ncca_core::Result<T> {
    fn stage(self, stage: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            stage: stage.into(),
            source,
        })
    }
}
