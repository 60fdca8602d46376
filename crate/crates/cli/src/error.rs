use std::path::PathBuf;

use fraclab_core::FracError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: FracError,
    },

    #[error("plot rejected: {0}")]
    Plot(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn config_err(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Names the stage a core failure came from.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> StageExt<T> for fraclab_core::Result<T> {
    fn stage(self, stage: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Stage { stage: stage(), source })
    }
}
