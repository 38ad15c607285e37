use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error in {context}: {detail}")]
    Dimension { context: String, detail: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("state error: {0}")]
    State(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("degenerate secant: previous step is zero")]
    DegenerateStep,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{}: format error at byte {offset}: {detail}", path.display())]
    Format {
        path: PathBuf,
        offset: usize,
        detail: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("all {runs} runs diverged")]
    AllRunsDiverged { runs: usize },
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Dimension {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
