use thiserror::Error;

#[derive(Debug, Error)]
pub enum PackError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid generator arguments: {0}")]
    InvalidGenerator(String),

    #[error("illegal action (item {item}, x {x}): {reason}")]
    IllegalAction {
        item: usize,
        x: usize,
        reason: String,
    },

    #[error("state is not a completed packing")]
    NotPacked,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
