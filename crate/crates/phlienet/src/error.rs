//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite loss (first offending tensor: {tensor})")]
    NonFiniteLoss { tensor: String },

    #[error("trajectory diverged for {system} at p={param}, ic #{ic}, t={time}")]
    Divergence { system: String, param: f64, ic: usize, time: f64 },

    #[error("dataset format error: {0}")]
    Format(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error at {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }

    /// Process exit code for the CLI: 2 usage, 3 data, 4 training, 5 evaluation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Shape(_)
            | Error::Format(_)
            | Error::MissingArtifact(_)
            | Error::Divergence { .. }
            | Error::Io { .. }
            | Error::Json { .. } => 3,
            Error::NonFiniteLoss { .. } | Error::Training(_) => 4,
            Error::Evaluation(_) => 5,
        }
    }
}
