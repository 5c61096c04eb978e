use thiserror::Error;

use crate::bits::BitString;

/// Errors produced by the key-generation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("static channel: u_max = 0")]
    StaticChannel,

    #[error("empty component list")]
    NoComponents,

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate envelope")]
    DegenerateEnvelope,

    #[error("flat spectrum")]
    FlatSpectrum,

    #[error("undefined conditional: reference string has no ones")]
    UndefinedConditional,

    #[error("insufficient residual entropy: requested {requested} bits, {available} available")]
    InsufficientEntropy { requested: usize, available: usize },

    #[error(transparent)]
    Reconciliation(#[from] ReconciliationFailed),

    #[error("malformed message: {0}")]
    MalformedMessage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unmatched configs: {0}")]
    Unmatched(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn check_len(left: usize, right: usize) -> Result<()> {
        if left == right {
            Ok(())
        } else {
            Err(Error::LengthMismatch { left, right })
        }
    }
}

/// Digest mismatch after turbo decoding. Carries Alice's decoded block so the
/// caller can still account for residual mismatches.
#[derive(Debug, Error)]
#[error("reconciliation failed after {iterations} iterations")]
pub struct ReconciliationFailed {
    pub decoded: BitString,
    pub iterations: usize,
}

pub type Result<T> = std::result::Result<T, Error>;
