//! Crate-wide error type.

use std::fmt;
use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A lifting task violates its geometric or kinematic constraints.
    InvalidTask(String),
    /// A caller-supplied parameter is out of range or inconsistent.
    InvalidParameter(String),
    /// Lifting index is undefined because the recommended weight limit is zero.
    UndefinedLiftingIndex,
    /// An input (file, recording, window set, dataset, corpus) holds no usable data.
    EmptyInput(String),
    /// An input file lacks the expected column header.
    MissingColumns { path: String, expected: String },
    /// Recording timestamps are not strictly increasing.
    NonMonotoneTime { path: String, row: usize },
    /// Recording time steps deviate from the median step beyond tolerance.
    NonUniformSampling { path: String, detail: String },
    /// A class has too few examples to appear in both split partitions.
    Stratification(String),
    /// An iterative optimizer exhausted its iteration budget.
    Convergence(String),
    /// A file row could not be parsed.
    Parse { path: String, line: usize, detail: String },
    Io { path: String, source: io::Error },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidTask(msg) => write!(f, "invalid lifting task: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UndefinedLiftingIndex => {
                write!(f, "lifting index undefined: recommended weight limit is zero")
            }
            Error::EmptyInput(msg) => write!(f, "empty input: {msg}"),
            Error::MissingColumns { path, expected } => {
                write!(f, "{path}: missing columns, expected header `{expected}`")
            }
            Error::NonMonotoneTime { path, row } => {
                write!(f, "{path}: time not strictly increasing at row {row}")
            }
            Error::NonUniformSampling { path, detail } => {
                write!(f, "{path}: non-uniform sampling: {detail}")
            }
            Error::Stratification(msg) => write!(f, "stratification failed: {msg}"),
            Error::Convergence(msg) => write!(f, "no convergence: {msg}"),
            Error::Parse { path, line, detail } => write!(f, "{path}:{line}: {detail}"),
            Error::Io { path, source } => write!(f, "{path}: {source}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
