use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid frame configuration: {0}")]
    InvalidConfig(String),

    #[error("expected {expected} bits, got {actual}")]
    InputSize { expected: usize, actual: usize },

    #[error("cluster {cluster} has rank {rank}, outside the encodable range 0..{limit}")]
    NonDecodablePattern { cluster: usize, rank: u64, limit: u64 },

    #[error("invalid index pattern: {0}")]
    InvalidPattern(String),

    #[error("loading has length {actual}, expected {expected}")]
    LoadingLength { expected: usize, actual: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mean power must be positive, got {0}")]
    NonPositivePower(f64),

    #[error("sample index {index} out of range 0..{len}")]
    SampleOutOfRange { index: usize, len: usize },

    #[error("discretization needs at least 3 levels, got {0}")]
    TooFewLevels(usize),

    #[error("instance with {active} active carriers exceeds the exhaustive cap {cap} and branch-and-bound is disabled")]
    InstanceTooLarge { active: usize, cap: usize },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
