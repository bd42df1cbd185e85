use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("field element 0 has no inverse")]
    ZeroInverse,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Full demand (`z = 1`) cannot be met by the asymptotic LT analysis.
    #[error("demand z = {0} is not supported by the asymptotic analysis (requires z < 1)")]
    UnsupportedDemand(f64),

    #[error("erasure rate {0} leaves no usable channel")]
    DeadChannel(f64),

    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A received packet reduced to an empty equation with a nonzero payload.
    #[error("corrupted stream: {0}")]
    CorruptedStream(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("malformed packet encoding: {0}")]
    Decode(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
