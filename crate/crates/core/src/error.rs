use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dense matrix of size {n} exceeds the dense limit {limit}")]
    DenseLimitExceeded { n: usize, limit: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("integer transform would need {needed} bits, width is {width}")]
    OverflowRisk { needed: u32, width: u32 },

    #[error("bundle of {planes} planes does not fit width {width} (max {max})")]
    BundleOverflow { planes: usize, width: u32, max: usize },

    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),

    #[error("pattern value {value} at index {index} is not binary")]
    NonBinary { index: usize, value: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bundle stream: {0}")]
    Stream(String),

    #[error("image: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
