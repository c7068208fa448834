use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A trust-game move or record breaks the exchange rules.
    #[error("protocol error in `{field}`: {message}")]
    Protocol { field: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A computation produced NaN or infinity where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular predictor matrix")]
    Singular,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Malformed input file content; `line` is 1-based and counts the header.
    #[error("line {line}, column `{column}`: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn protocol(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Protocol {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures that indicate a numerical bug rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
