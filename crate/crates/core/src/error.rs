use thiserror::Error;

/// Errors shared by every stage of the proofreading engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("out of bounds: {0}")]
    Bounds(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("synthetic generation failed: {0}")]
    Generation(String),
    #[error("version conflict: current head is {head}")]
    Conflict { head: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
