use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnetError {
    #[error("mask allows no legal action")]
    AllIllegal,

    #[error("input length {got} does not match the configured shape ({want})")]
    ShapeMismatch { got: usize, want: usize },

    #[error("non-finite gradient encountered; step aborted")]
    NonFiniteGradient,

    #[error("empty minibatch")]
    EmptyBatch,

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
