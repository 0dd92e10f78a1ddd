use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parity mismatch: {0}")]
    Parity(String),
    #[error("unbounded search: {0}")]
    Unbounded(String),
    #[error("truncation window insufficient: {0}")]
    Truncation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
