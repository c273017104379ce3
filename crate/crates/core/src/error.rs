use std::io;

/// Errors produced by the vocoder engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Unusable configuration, e.g. a window/hop pair that violates COLA.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("predictor unavailable: {0}")]
    PredictorUnavailable(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("predictor contract violation: {0}")]
    ContractViolation(String),

    /// Malformed input file (WAV, MELB, config).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures originating in the noise predictor or its transport.
    pub fn is_predictor_failure(&self) -> bool {
        matches!(
            self,
            Error::PredictorUnavailable(_) | Error::Protocol(_) | Error::ContractViolation(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
