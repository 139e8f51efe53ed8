use crate::{ranked_reward, RewardBuffers, SampleBuffer, SelfplayError, TrainConfig};
use mcts::Evaluator;
use nnet::{save_params, ModelParams, Trainer};
use pack_core::{generate_sliced_instance, PackState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

/// Adapter exposing the policy-value net to the tree search.
pub struct NetEvaluator<'a>(pub &'a ModelParams);

impl Evaluator for NetEvaluator<'_> {
    fn evaluate(&self, state_tensor: &[f64], legal_mask: &[bool]) -> (Vec<f64>, f64) {
        let out = self
            .0
            .forward(state_tensor, legal_mask)
            .expect("search only evaluates states with legal actions");
        (out.policy, out.value)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub mean_reward: f64,
    pub reward_std: f64,
    pub optimality_ratio: f64,
    pub loss: f64,
    pub wall_seconds: f64,
}

pub const METRICS_HEADER: &str =
    "iteration,mean_reward,reward_std,optimality_ratio,loss,wall_seconds";

pub struct TrainOutcome {
    pub params: ModelParams,
    pub metrics: Vec<IterationMetrics>,
    /// Final reward-buffer snapshot and its threshold, for later evaluation.
    pub reward_buffer: Vec<f64>,
    pub threshold: f64,
    pub metrics_csv: String,
}

struct EpisodeResult {
    samples: Vec<(Vec<f64>, Vec<bool>, Vec<f64>)>,
    reward: f64,
    optimal: bool,
}

fn play_episode(
    params: &ModelParams,
    config: &TrainConfig,
    episode_seed: u64,
    r_alpha: f64,
) -> Result<EpisodeResult, SelfplayError> {
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
    let h_star_target = if config.bias_short_targets {
        let a = rng.gen_range(config.h_star_min..=config.h_star_max);
        let b = rng.gen_range(config.h_star_min..=config.h_star_max);
        a.min(b)
    } else {
        rng.gen_range(config.h_star_min..=config.h_star_max)
    };
    let instance_seed: u64 = rng.gen();
    let instance = Arc::new(generate_sliced_instance(
        config.w_prime,
        h_star_target,
        config.n_items,
        instance_seed,
    )?);
    let mut state = PackState::new(instance, config.h_prime, config.adjacency_mask)?;
    let search_config = config.search_config();
    let evaluator = NetEvaluator(params);
    let mut samples = Vec::with_capacity(config.n_items);
    loop {
        let result = mcts::search(&state, &evaluator, &search_config, r_alpha, &mut rng)?;
        samples.push((state.encode(), state.legal_mask(), result.pi.clone()));
        let action = result.sample_action(state.width(), &mut rng);
        if state.apply(action)?.done {
            break;
        }
    }
    let reward = state.terminal_reward();
    // Sliced instances have integral H* = the slicing height.
    let optimal = state.all_packed() && state.h_tilde() == h_star_target;
    Ok(EpisodeResult {
        samples,
        reward,
        optimal,
    })
}

/// JSON sidecar written next to each checkpoint: enough context to resume
/// evaluation (reward buffer and threshold) and audit the run.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct CheckpointMeta {
    pub config: TrainConfig,
    pub iteration: usize,
    pub rng_restart_seed: u64,
    pub reward_buffer: Vec<f64>,
    pub threshold: f64,
}

/// Loads a `.bin` checkpoint plus its sidecar when one sits next to it.
pub fn load_checkpoint(
    path: &Path,
) -> Result<(ModelParams, Option<CheckpointMeta>), SelfplayError> {
    let params = nnet::load_params(path)?;
    let sidecar_path = path.with_extension("json");
    let meta = if sidecar_path.exists() {
        Some(serde_json::from_slice(&std::fs::read(sidecar_path)?)?)
    } else {
        None
    };
    Ok((params, meta))
}

fn write_checkpoint(
    dir: &Path,
    name: &str,
    params: &ModelParams,
    sidecar: &CheckpointMeta,
) -> Result<(), SelfplayError> {
    let checkpoints = dir.join("checkpoints");
    std::fs::create_dir_all(&checkpoints)?;
    save_params(params, &checkpoints.join(format!("{name}.bin")))?;
    let json = serde_json::to_vec_pretty(sidecar)?;
    let tmp = checkpoints.join(format!("{name}.json.tmp"));
    std::fs::write(&tmp, json)?;
    std::fs::rename(tmp, checkpoints.join(format!("{name}.json")))?;
    Ok(())
}

/// The ranked-reward self-play loop: K iterations of J seeded episodes,
/// reward ranking against the frozen buffer snapshot, tau gradient steps on
/// the per-iteration sample buffer, then `B = B'`.
pub fn run_training(
    config: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome, SelfplayError> {
    config.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("config.json"),
            serde_json::to_vec_pretty(config)?,
        )?;
    }

    let mut master_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trainer = Trainer::new(
        ModelParams::init(config.net_config(), config.seed),
        config.momentum,
    );
    let mut buffers = RewardBuffers::new(config.buffer_capacity);
    let mut samples = SampleBuffer::default();
    let mut metrics = Vec::with_capacity(config.iterations);
    // Desk-scale self-play is noisy; keep the parameters from the strongest
    // iteration (by mean self-play reward) rather than whatever the last
    // update left behind.
    let mut best_params = trainer.params.clone();
    let mut best_reward = f64::NEG_INFINITY;
    let mut csv = String::from(METRICS_HEADER);
    csv.push('\n');

    for iteration in 0..config.iterations {
        let start = Instant::now();
        let r_alpha = buffers.threshold(config.alpha);
        let episode_seeds: Vec<u64> = (0..config.episodes_per_iteration)
            .map(|_| master_rng.gen())
            .collect();
        let collector_seed: u64 = master_rng.gen();
        // Drawn unconditionally so the rng stream (and thus the trained
        // model) does not depend on checkpoint cadence or output directory.
        let rng_restart_seed: u64 = master_rng.gen();

        let snapshot = trainer.params.clone();
        let episodes: Vec<EpisodeResult> = episode_seeds
            .par_iter()
            .map(|&seed| play_episode(&snapshot, config, seed, r_alpha))
            .collect::<Result<_, _>>()?;

        let mut collector_rng = ChaCha8Rng::seed_from_u64(collector_seed);
        let rewards: Vec<f64> = episodes.iter().map(|e| e.reward).collect();
        let optimal = episodes.iter().filter(|e| e.optimal).count();
        for episode in episodes {
            buffers.push(episode.reward);
            let z = ranked_reward(
                episode.reward,
                buffers.snapshot(),
                config.alpha,
                &mut collector_rng,
            );
            for (tensor, mask, pi) in episode.samples {
                samples.push((tensor, mask, pi, z));
            }
        }

        let mut loss_sum = 0.0;
        // Linear decay from learning_rate to learning_rate_final over the run.
        let decay = if config.iterations > 1 {
            iteration as f64 / (config.iterations - 1) as f64
        } else {
            0.0
        };
        let lr = config.learning_rate + decay * (config.learning_rate_final - config.learning_rate);
        for _ in 0..config.train_steps {
            let batch = samples.sample_batch(config.batch_size, &mut collector_rng);
            match trainer.train_step(&batch, lr) {
                Ok(loss) => loss_sum += loss,
                Err(err) => {
                    // Keep the wreckage inspectable before bailing out.
                    if let Some(dir) = out_dir {
                        let sidecar = CheckpointMeta {
                            config: config.clone(),
                            iteration,
                            rng_restart_seed,
                            reward_buffer: buffers.snapshot().to_vec(),
                            threshold: r_alpha,
                        };
                        write_checkpoint(dir, "abort", &trainer.params, &sidecar)?;
                    }
                    return Err(err.into());
                }
            }
        }
        samples.clear();
        buffers.finish_iteration();

        let n = rewards.len() as f64;
        let mean_reward = rewards.iter().sum::<f64>() / n;
        let reward_std =
            (rewards.iter().map(|r| (r - mean_reward).powi(2)).sum::<f64>() / n).sqrt();
        let row = IterationMetrics {
            iteration,
            mean_reward,
            reward_std,
            optimality_ratio: optimal as f64 / n,
            loss: loss_sum / config.train_steps as f64,
            wall_seconds: if config.deterministic {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            },
        };
        writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{:.6},{:.3}",
            row.iteration,
            row.mean_reward,
            row.reward_std,
            row.optimality_ratio,
            row.loss,
            row.wall_seconds
        )
        .expect("string write");
        if row.mean_reward > best_reward {
            best_reward = row.mean_reward;
            best_params = trainer.params.clone();
        }
        metrics.push(row);

        if let Some(dir) = out_dir {
            std::fs::write(dir.join("metrics.csv"), csv.as_bytes())?;
            let last = iteration + 1 == config.iterations;
            if last || (iteration + 1) % config.checkpoint_every.max(1) == 0 {
                let sidecar = CheckpointMeta {
                    config: config.clone(),
                    iteration,
                    rng_restart_seed,
                    reward_buffer: buffers.snapshot().to_vec(),
                    threshold: buffers.threshold(config.alpha),
                };
                write_checkpoint(dir, &format!("iter_{iteration:04}"), &trainer.params, &sidecar)?;
            }
        }
    }

    let threshold = buffers.threshold(config.alpha);
    if let Some(dir) = out_dir {
        // The selected model, alongside the raw per-iteration checkpoints.
        let sidecar = CheckpointMeta {
            config: config.clone(),
            iteration: config.iterations.saturating_sub(1),
            rng_restart_seed: master_rng.gen(),
            reward_buffer: buffers.snapshot().to_vec(),
            threshold,
        };
        write_checkpoint(dir, "model", &best_params, &sidecar)?;
    }
    Ok(TrainOutcome {
        params: best_params,
        metrics,
        reward_buffer: buffers.snapshot().to_vec(),
        threshold,
        metrics_csv: csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_iteration_accounting() {
        let config = TrainConfig {
            iterations: 1,
            episodes_per_iteration: 1,
            mcts_simulations: 1,
            train_steps: 1,
            batch_size: 4,
            w_prime: 4,
            h_prime: 4,
            n_items: 3,
            h_star_min: 2,
            h_star_max: 4,
            conv_layers: 1,
            channels: 4,
            ..Default::default()
        };
        let outcome = run_training(&config, None).unwrap();
        assert_eq!(outcome.metrics.len(), 1);
        assert_eq!(outcome.reward_buffer.len(), 1);
        assert!(outcome.metrics[0].mean_reward > 0.0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let config = TrainConfig {
            iterations: 2,
            episodes_per_iteration: 3,
            mcts_simulations: 4,
            train_steps: 2,
            batch_size: 4,
            w_prime: 4,
            h_prime: 4,
            n_items: 3,
            h_star_min: 2,
            h_star_max: 4,
            conv_layers: 1,
            channels: 4,
            seed: 5,
            ..Default::default()
        };
        let a = run_training(&config, None).unwrap();
        let b = run_training(&config, None).unwrap();
        assert_eq!(a.metrics_csv, b.metrics_csv);
        assert_eq!(a.params.tensors, b.params.tensors);
    }

    #[test]
    fn run_directory_layout() {
        let config = TrainConfig {
            iterations: 1,
            episodes_per_iteration: 1,
            mcts_simulations: 2,
            train_steps: 1,
            batch_size: 2,
            w_prime: 4,
            h_prime: 4,
            n_items: 2,
            h_star_min: 2,
            h_star_max: 4,
            conv_layers: 1,
            channels: 2,
            checkpoint_every: 1,
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        run_training(&config, Some(dir.path())).unwrap();
        assert!(dir.path().join("config.json").exists());
        assert!(dir.path().join("metrics.csv").exists());
        assert!(dir.path().join("checkpoints/model.bin").exists());
        assert!(dir.path().join("checkpoints/model.json").exists());
        assert!(dir.path().join("checkpoints/iter_0000.bin").exists());
        assert!(dir.path().join("checkpoints/iter_0000.json").exists());
        let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert!(csv.starts_with(METRICS_HEADER));
        assert_eq!(csv.lines().count(), 2);
    }
}
