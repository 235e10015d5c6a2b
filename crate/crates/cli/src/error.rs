use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        source: skewspec_core::Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    /// Wraps a core error; invalid parameters count as config errors.
    pub fn from_core(context: impl Into<String>, source: skewspec_core::Error) -> Self {
        use skewspec_core::Error as E;
        match source {
            E::Stagnated { .. } | E::NotNormalized(_) | E::Coverage { .. } => CliError::Numerical {
                context: context.into(),
                source,
            },
            other => CliError::Config(format!("{}: {other}", context.into())),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
