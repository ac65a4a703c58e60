use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("solver failure: {0}")]
    Solver(hyprad_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigParse { .. } | CliError::Validation(_) => 1,
            CliError::Solver(_) | CliError::Io { .. } => 2,
            CliError::Verification(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<hyprad_core::Error> for CliError {
    /// Errors about inputs are validation failures; the rest come from the numerics.
    fn from(e: hyprad_core::Error) -> Self {
        use hyprad_core::Error as E;
        match e {
            E::InvalidDomain(_)
            | E::InvalidArgument(_)
            | E::OutOfDomain { .. }
            | E::NonPositiveData { .. }
            | E::Unresolved
            | E::Parse(_) => CliError::Validation(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
