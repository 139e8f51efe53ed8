//! Ranked-reward self-play training loop and the evaluation harness.

mod buffers;
mod config;
mod evaluate;
mod training;

pub use buffers::{nearest_rank_percentile, ranked_reward, RewardBuffers, SampleBuffer};
pub use config::TrainConfig;
pub use evaluate::{evaluate, solve_one, EvalReport, EvalRow, Solver};
pub use training::{
    load_checkpoint, run_training, CheckpointMeta, IterationMetrics, NetEvaluator, TrainOutcome,
    METRICS_HEADER,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelfplayError {
    #[error(transparent)]
    Pack(#[from] pack_core::PackError),

    #[error(transparent)]
    Net(#[from] nnet::NnetError),

    #[error(transparent)]
    Mcts(#[from] mcts::MctsError),

    #[error(transparent)]
    Oracle(#[from] exact_oracle::OracleError),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
