use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state variable became non-finite while stepping a model forward.
    #[error("integration diverged at t = {time:.6e} s")]
    Divergence { time: f64 },

    #[error("normal matrix is singular; retry with lambda > 0")]
    Singular,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// Every problem found while validating a config, one per field.
    #[error("invalid config:{}", .0.iter().map(|d| format!("\n  {d}")).collect::<String>())]
    InvalidConfig(Vec<String>),

    #[error("objective returned {value} at position {position:?}")]
    NonFiniteObjective { position: Vec<f64>, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
