//! Two-headed policy-value network over binary occupancy tensors, with
//! hand-rolled backpropagation in double precision.
//!
//! Architecture: a stack of 3x3 same-padded convolutions with ReLU, a
//! linear policy head with masked softmax, and a linear value head squashed
//! to [-1, 1] with tanh.

mod checkpoint;
mod error;
mod model;
mod train;

pub use checkpoint::{load_params, save_params, CHECKPOINT_VERSION};
pub use error::NnetError;
pub use model::{ModelParams, NetConfig, NetOutput, Tensor};
pub use train::{loss, Sample, Trainer};

/// Probability floor applied inside the cross-entropy log.
pub const PROB_FLOOR: f64 = 1e-12;
