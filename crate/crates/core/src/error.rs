use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("undeclared indeterminate `{name}` at line {line}, column {col}")]
    Undeclared { name: String, line: usize, col: usize },

    #[error("non-integer exponent at line {line}, column {col}")]
    NonIntegerExponent { line: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("path tracking failed: {0}")]
    PathFailure(String),

    #[error("structure not recovered: {0}")]
    NotRecovered(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
