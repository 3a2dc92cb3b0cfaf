use thiserror::Error;

/// Errors raised by the tail-bound toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("random variable `{label}` is not centered and cannot enter a sum")]
    NotCentered { label: String },

    #[error("quadrature did not produce a finite value: {0}")]
    Quadrature(String),

    #[error("function has an empty effective domain")]
    EmptyDomain,

    #[error("member {index} has infinite norm in {space}")]
    InfiniteNorm { index: usize, space: String },

    #[error("space is not in class B2: {0}")]
    NotB2(String),

    #[error("missing constant: {0}")]
    MissingConstant(String),

    #[error("moment envelope is infinite for every p > 2")]
    EnvelopeInfinite,

    #[error("insufficient tail data: {0}")]
    InsufficientTailData(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
