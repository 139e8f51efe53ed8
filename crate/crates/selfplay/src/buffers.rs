use nnet::Sample;
use rand::Rng;
use std::collections::VecDeque;

/// Nearest-rank percentile: sorted ascending, index `ceil(alpha/100 * n) - 1`.
pub fn nearest_rank_percentile(values: &[f64], alpha: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (alpha / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.saturating_sub(1).min(sorted.len() - 1)]
}

/// Ranked reward: +1 above the alpha-th percentile of the buffer (or at the
/// reward ceiling of 1.0), -1 below it, a fair coin at equality. An empty
/// buffer bootstraps with threshold 0 so any positive reward ranks +1.
pub fn ranked_reward<R: Rng>(reward: f64, buffer: &[f64], alpha: f64, rng: &mut R) -> f64 {
    let threshold = if buffer.is_empty() {
        0.0
    } else {
        nearest_rank_percentile(buffer, alpha)
    };
    mcts::ranked_value(reward, threshold, rng)
}

/// The recent-rewards pair from the self-play loop: `B` is the frozen
/// snapshot thresholds are computed from, `B'` the staging FIFO that keeps
/// accumulating; `B` is replaced wholesale by `B'` at iteration end.
#[derive(Debug, Clone)]
pub struct RewardBuffers {
    snapshot: Vec<f64>,
    staging: VecDeque<f64>,
    capacity: usize,
}

impl RewardBuffers {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        RewardBuffers {
            snapshot: Vec::new(),
            staging: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, reward: f64) {
        if self.staging.len() == self.capacity {
            self.staging.pop_front();
        }
        self.staging.push_back(reward);
    }

    /// Current threshold from the frozen snapshot; 0 before any snapshot.
    pub fn threshold(&self, alpha: f64) -> f64 {
        if self.snapshot.is_empty() {
            0.0
        } else {
            nearest_rank_percentile(&self.snapshot, alpha)
        }
    }

    pub fn snapshot(&self) -> &[f64] {
        &self.snapshot
    }

    pub fn staging_len(&self) -> usize {
        self.staging.len()
    }

    /// `B = B'`: snapshot the staging buffer at iteration end.
    pub fn finish_iteration(&mut self) {
        self.snapshot = self.staging.iter().copied().collect();
    }
}

/// Per-iteration training samples `D`; cleared after every iteration.
#[derive(Default)]
pub struct SampleBuffer {
    samples: Vec<Sample>,
}

impl SampleBuffer {
    pub fn push(&mut self, sample: Sample) {
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    /// Uniform with replacement.
    pub fn sample_batch<R: Rng>(&self, size: usize, rng: &mut R) -> Vec<Sample> {
        (0..size)
            .map(|_| self.samples[rng.gen_range(0..self.samples.len())].clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_rank_example() {
        let b = [0.5, 0.6, 0.7, 0.8];
        assert_eq!(nearest_rank_percentile(&b, 75.0), 0.7);
        assert_eq!(nearest_rank_percentile(&b, 100.0), 0.8);
        assert_eq!(nearest_rank_percentile(&b, 1.0), 0.5);
    }

    #[test]
    fn ranked_reward_case_split() {
        let b = [0.5, 0.6, 0.7, 0.8];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(ranked_reward(0.8, &b, 75.0, &mut rng), 1.0);
        assert_eq!(ranked_reward(0.5, &b, 75.0, &mut rng), -1.0);
        assert_eq!(ranked_reward(1.0, &b, 75.0, &mut rng), 1.0);
        // Equality is a fair coin.
        let mut ups = 0;
        for _ in 0..10_000 {
            if ranked_reward(0.7, &b, 75.0, &mut rng) > 0.0 {
                ups += 1;
            }
        }
        let freq = ups as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.05, "tie frequency {freq}");
    }

    #[test]
    fn empty_buffer_bootstraps_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(ranked_reward(0.01, &[], 75.0, &mut rng), 1.0);
    }

    #[test]
    fn plus_one_probability_monotone_in_reward() {
        let b = [0.2, 0.4, 0.6, 0.8];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let prob_up = |r: f64, rng: &mut ChaCha8Rng| {
            let n = 2000;
            (0..n)
                .filter(|_| ranked_reward(r, &b, 50.0, rng) > 0.0)
                .count() as f64
                / n as f64
        };
        let mut prev = 0.0;
        for r in [0.1, 0.3, 0.4, 0.5, 0.9, 1.0] {
            let p = prob_up(r, &mut rng);
            assert!(p + 0.03 >= prev, "p(+1) dropped at r={r}: {p} < {prev}");
            prev = p;
        }
    }

    #[test]
    fn staging_is_fifo_capped_and_snapshot_frozen() {
        let mut buffers = RewardBuffers::new(3);
        buffers.push(0.1);
        buffers.push(0.2);
        buffers.finish_iteration();
        assert_eq!(buffers.snapshot(), &[0.1, 0.2]);
        buffers.push(0.3);
        buffers.push(0.4);
        // Snapshot unchanged until the iteration ends; staging capped at 3.
        assert_eq!(buffers.snapshot(), &[0.1, 0.2]);
        assert_eq!(buffers.staging_len(), 3);
        buffers.finish_iteration();
        assert_eq!(buffers.snapshot(), &[0.2, 0.3, 0.4]);
    }
}
