use thiserror::Error;

/// Errors raised by code construction, channel modelling, decoding and the
/// simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid code dimensions n={n}, k={k}: {reason}")]
    InvalidDimensions { n: usize, k: usize, reason: String },

    #[error("invalid CRC polynomial {poly:#x} for {redundancy} parity bits: {reason}")]
    InvalidPolynomial {
        poly: u64,
        redundancy: usize,
        reason: String,
    },

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("reliability must be a non-negative number, got {0}")]
    NegativeReliability(f64),

    #[error("pattern log-probability must be <= 0, got {0}")]
    PositiveLogProbability(f64),

    #[error("no query has been recorded yet")]
    NoQueries,

    #[error("invalid decode policy: {0}")]
    InvalidPolicy(String),

    #[error("word is not a code-word")]
    NotACodeword,

    #[error("exhaustive oracle limited to n <= {max}, got n={n}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("statistical guard tripped: {0}")]
    Guard(String),

    #[error("threshold monotonicity violated at trial {trial}: {detail}")]
    MonotonicityViolation { trial: u64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
