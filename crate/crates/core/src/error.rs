use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the modelling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("column `{column}` has kind {found}, expected {expected}")]
    ColumnKind {
        column: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("model is not trained")]
    Untrained,

    #[error("artifact mismatch: {0}")]
    Artifact(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
