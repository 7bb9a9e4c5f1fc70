use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Ingestion failures raised while building a [`crate::panel::Panel`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("unit `{unit}` has no value at {timestamp}")]
    Gap { unit: String, timestamp: String },
    #[error("duplicate row for unit `{unit}` at {timestamp}")]
    Duplicate { unit: String, timestamp: String },
    #[error("timestamp {timestamp} is not on the {step_secs}s grid")]
    OffGrid { timestamp: String, step_secs: i64 },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unit `{0}` named in the schema has no rows")]
    UnknownUnit(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest error: {0}")]
    Ingest(#[from] IngestError),
    #[error("config error: {0}")]
    Config(String),
    #[error("window error: need context {context_len} + horizon {horizon} <= {available} pre-intervention steps")]
    Window {
        context_len: usize,
        horizon: usize,
        available: usize,
    },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("training diverged at epoch {epoch}: {reason}")]
    Train { epoch: usize, reason: String },
    #[error("metric error: {0}")]
    Metric(String),
    #[error("statistics error: {0}")]
    Stat(String),
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 = configuration, 3 = data, 4 = numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Window { .. } | Error::Artifact(_) => 2,
            Error::Ingest(_) | Error::Io { .. } | Error::Csv(_) | Error::Shape(_) => 3,
            Error::Domain(_)
            | Error::Numeric(_)
            | Error::Train { .. }
            | Error::Metric(_)
            | Error::Stat(_) => 4,
        }
    }
}
