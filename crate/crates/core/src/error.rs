use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("investor {investor} sells {quantity} of {asset} on {date} but holds only {held}")]
    Oversell {
        investor: String,
        asset: String,
        date: String,
        quantity: f64,
        held: f64,
    },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("collinear covariates: {}", .0.join(", "))]
    Collinear(Vec<String>),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("unknown asset: {0}")]
    UnknownAsset(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("missing forecast model: {0}")]
    MissingModel(String),

    #[error("no overlapping months between the two return series")]
    NoOverlap,

    #[error("only {0} overlapping months, need at least 4")]
    InsufficientOverlap(usize),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
