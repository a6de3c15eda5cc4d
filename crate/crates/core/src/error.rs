use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes, hyperparameters or other configuration values are inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller-supplied data violates an operation's precondition.
    #[error("input error: {0}")]
    Input(String),

    /// A tabular file could not be read or interpreted.
    #[error("data error at row {row}, column {column:?}: {message}")]
    Data {
        row: usize,
        column: Option<String>,
        message: String,
    },

    /// An API contract was broken by the caller (e.g. differentiating a non-scalar).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
