use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("error model is not linear: {0}")]
    NotLinear(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("transition width is infinite (MinDer = 0)")]
    InfiniteWidth,

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("undefined threshold: {0}")]
    UndefinedThreshold(String),

    #[error("unsupported split: {0}")]
    UnsupportedSplit(String),

    #[error("load error in `{field}`: {message}")]
    Load { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn load(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Load {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of a numerical procedure rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoRoot(_) | Error::DegenerateFit(_) | Error::InfiniteWidth | Error::UndefinedThreshold(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
