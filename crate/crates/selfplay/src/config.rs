use nnet::NetConfig;
use serde::{Deserialize, Serialize};

/// Full training configuration. Every field has a desk-scale default; the
/// paper-scale preset is available via [`TrainConfig::paper_scale`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Training iterations K.
    pub iterations: usize,
    /// Self-play episodes J per iteration.
    pub episodes_per_iteration: usize,
    /// MCTS simulations M per move.
    pub mcts_simulations: u32,
    /// Ranked-reward percentile alpha.
    pub alpha: f64,
    /// Gradient steps tau per iteration.
    pub train_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate at the final iteration; the rate decays linearly from
    /// `learning_rate` to this value over the run. Equal values disable decay.
    pub learning_rate_final: f64,
    pub momentum: f64,
    /// Reward buffer capacity.
    pub buffer_capacity: usize,

    /// Virtual bin width W' (= the latency budget W*).
    pub w_prime: usize,
    /// Virtual bin height H'.
    pub h_prime: usize,
    pub n_items: usize,
    /// Sliced-instance H* range, inclusive.
    pub h_star_min: usize,
    pub h_star_max: usize,
    /// Bias self-play toward short target heights (H* drawn as the min of
    /// two uniform draws). Short targets leave the most horizontal slack and
    /// are where packings most often end up one row over optimal.
    pub bias_short_targets: bool,
    pub adjacency_mask: bool,

    pub conv_layers: usize,
    pub channels: usize,

    pub c_puct: f64,
    pub dirichlet_epsilon: f64,
    pub dirichlet_alpha: f64,
    /// Move-sampling temperature during self-play (evaluation uses argmax).
    pub temperature: f64,

    pub seed: u64,
    /// Write wall_seconds as 0 so two identically seeded runs emit
    /// byte-identical metrics.
    pub deterministic: bool,
    /// Checkpoint every this many iterations (the final one is always kept).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 50,
            episodes_per_iteration: 10,
            mcts_simulations: 64,
            alpha: 75.0,
            train_steps: 50,
            batch_size: 32,
            learning_rate: 3e-4,
            learning_rate_final: 3e-4,
            momentum: 0.9,
            buffer_capacity: 100,
            w_prime: 8,
            h_prime: 8,
            n_items: 5,
            h_star_min: 2,
            h_star_max: 8,
            bias_short_targets: false,
            adjacency_mask: false,
            conv_layers: 3,
            channels: 32,
            c_puct: 1.5,
            dirichlet_epsilon: 0.25,
            dirichlet_alpha: 1.0,
            temperature: 1.0,
            seed: 0,
            deterministic: true,
            checkpoint_every: 10,
        }
    }
}

impl TrainConfig {
    /// The published full-scale setting: 15x15 bin, 10 items, 300 iterations
    /// of 20 episodes at 200 simulations. Hours-to-days of CPU self-play.
    pub fn paper_scale() -> Self {
        TrainConfig {
            iterations: 300,
            episodes_per_iteration: 20,
            mcts_simulations: 200,
            w_prime: 15,
            h_prime: 15,
            n_items: 10,
            h_star_min: 2,
            h_star_max: 15,
            conv_layers: 15,
            channels: 32,
            train_steps: 200,
            learning_rate: 1e-3,
            learning_rate_final: 1e-3,
            bias_short_targets: false,
            ..Default::default()
        }
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            input_planes: self.n_items + 1,
            height: self.h_prime,
            width: self.w_prime,
            conv_layers: self.conv_layers,
            channels: self.channels,
            action_space: self.n_items * self.w_prime,
        }
    }

    pub fn search_config(&self) -> mcts::SearchConfig {
        mcts::SearchConfig {
            simulations: self.mcts_simulations,
            c_puct: self.c_puct,
            dirichlet_epsilon: self.dirichlet_epsilon,
            dirichlet_alpha: self.dirichlet_alpha,
            temperature: self.temperature,
        }
    }

    pub fn validate(&self) -> Result<(), crate::SelfplayError> {
        let bad = |msg: &str| Err(crate::SelfplayError::InvalidConfig(msg.into()));
        if !(self.alpha > 0.0 && self.alpha < 100.0) {
            return bad("alpha must be in (0, 100)");
        }
        if self.episodes_per_iteration < 1 {
            return bad("episodes_per_iteration must be >= 1");
        }
        if self.mcts_simulations < 1 {
            return bad("mcts_simulations must be >= 1");
        }
        if self.h_star_min < 1 || self.h_star_max > self.h_prime || self.h_star_min > self.h_star_max {
            return bad("h_star range must satisfy 1 <= min <= max <= h_prime");
        }
        if self.n_items > self.w_prime * self.h_star_min {
            return bad("n_items too large for the smallest sliced bin");
        }
        if self.batch_size < 1 || self.train_steps < 1 {
            return bad("batch_size and train_steps must be >= 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        TrainConfig::default().validate().unwrap();
        TrainConfig::paper_scale().validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: Result<TrainConfig, _> =
            serde_json::from_str(r#"{"iterations": 3, "bogus_key": 1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: TrainConfig = serde_json::from_str(r#"{"iterations": 3}"#).unwrap();
        assert_eq!(c.iterations, 3);
        assert_eq!(c.n_items, TrainConfig::default().n_items);
    }
}
