use thiserror::Error;

/// Errors raised by the library. Inequality violations are not errors; they
/// come back as reports from the statement checkers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n = {expected}, found n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("capacity exceeded for {what}: requested {requested}, limit {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("empty support")]
    EmptySupport,

    #[error("distribution is not normalized (total mass {total})")]
    NotNormalized { total: f64 },

    #[error("negative or non-finite mass {mass} at index {index}")]
    InvalidMass { index: usize, mass: f64 },

    #[error("table length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("conditioning on an event of probability zero")]
    ZeroProbabilityEvent,

    #[error("invalid block index {index} for a joint with {blocks} blocks")]
    InvalidBlock { index: usize, blocks: usize },

    #[error("malformed linear map: {0}")]
    MalformedMap(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("subspace search failed: {0}")]
    SearchFailure(String),

    #[error("hypothesis not met: {name} (gap {gap:.3e})")]
    Hypothesis { name: String, gap: f64 },

    #[error("sampling retry cap of {cap} draws exhausted")]
    RetryCapExhausted { cap: usize, attempts: Vec<String> },

    #[error("recursion depth cap {cap} exceeded")]
    RecursionDepth { cap: usize },

    #[error("pipeline made no progress: {0}")]
    NoProgress(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
