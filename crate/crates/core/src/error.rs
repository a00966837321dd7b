use thiserror::Error;

use crate::terms::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("size limit exceeded: {what} needs {requested}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("not a median algebra: {0}")]
    NotMedian(String),

    #[error("set is empty")]
    EmptySet,

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Whether this error comes from a configured resource cap rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::SizeLimit { .. })
    }
}

/// Fails with [`Error::SizeLimit`] when `requested > limit`.
pub(crate) fn ensure_within(what: &'static str, requested: usize, limit: usize) -> Result<()> {
    if requested > limit {
        Err(Error::SizeLimit {
            what,
            requested,
            limit,
        })
    } else {
        Ok(())
    }
}
