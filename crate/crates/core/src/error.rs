use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("line {line}: expected {expected} columns, found {found}")]
    RowArity {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: label value {value:?} is not in the label map")]
    UnmappedLabel { line: u64, value: String },

    #[error("line {line}, column {column}: {value:?} is not a number")]
    NonNumeric {
        line: u64,
        column: usize,
        value: String,
    },

    #[error("label column {0} not found")]
    MissingLabelColumn(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class {label} has {size} samples, need at least {required}")]
    ClassTooSmall {
        label: i8,
        size: usize,
        required: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("neighbor count k={k} must be smaller than the sample count n={n}")]
    TooManyNeighbors { k: usize, n: usize },

    #[error("dual problem is invalid: {0}")]
    InvalidProblem(String),

    #[error("linear system is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
