use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input text could not be parsed; `line` is 1-based.
    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("out of range: {0}")]
    Range(String),

    /// Log-log fits cannot proceed (e.g. F(s) = 0 inside the fitted range).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical synthesis error: {0}")]
    Synthesis(String),

    #[error("too many failed shuffle replicates: {redraws} redraws exceeds the cap of {cap}")]
    TooManyRedraws { redraws: usize, cap: usize },
}
