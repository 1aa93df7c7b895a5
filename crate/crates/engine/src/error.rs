use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("bounds of `{0}` are inverted")]
    InvertedBounds(String),
    #[error("non-finite data in `{0}`")]
    NonFinite(String),
    #[error("row `{row}` references column {col} which does not exist")]
    ColumnOutOfRange { row: String, col: usize },
    #[error("binary index {0} does not exist")]
    BinaryOutOfRange(usize),
    #[error("binary column `{0}` has bounds outside [0, 1]")]
    BinaryBounds(String),
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("name `{0}` is used more than once")]
    NameCollision(String),
    #[error("name `{0}` is empty or contains whitespace")]
    BadName(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, msg: impl Into<String>) -> Self {
        Self { line, msg: msg.into() }
    }
}
