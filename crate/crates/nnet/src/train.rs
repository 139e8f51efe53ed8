use crate::model::Tensor;
use crate::{ModelParams, NetOutput, NnetError, PROB_FLOOR};

/// Squared value error plus cross-entropy of the target policy against the
/// predicted policy: `(v - z)^2 - sum_a pi_hat(a) ln pi_theta(a)`.
pub fn loss(output: &NetOutput, target_policy: &[f64], z: f64) -> f64 {
    let mut l = (output.value - z).powi(2);
    for (p, t) in output.policy.iter().zip(target_policy) {
        if *t > 0.0 {
            l -= t * p.max(PROB_FLOOR).ln();
        }
    }
    l
}

/// One training sample: state tensor, MCTS target policy, ranked reward.
pub type Sample = (Vec<f64>, Vec<bool>, Vec<f64>, f64);

/// Momentum SGD over a mutable parameter copy.
pub struct Trainer {
    pub params: ModelParams,
    velocity: Vec<Tensor>,
    pub momentum: f64,
}

impl Trainer {
    pub fn new(params: ModelParams, momentum: f64) -> Trainer {
        let velocity = params.zero_like_tensors();
        Trainer {
            params,
            velocity,
            momentum,
        }
    }

    /// One gradient-descent update on the mean loss of the minibatch.
    /// Returns the pre-update mean loss. A non-finite gradient aborts the
    /// step, leaving the parameters untouched.
    pub fn train_step(&mut self, batch: &[Sample], learning_rate: f64) -> Result<f64, NnetError> {
        if batch.is_empty() {
            return Err(NnetError::EmptyBatch);
        }
        let mut grads = self.params.zero_like_tensors();
        let mut total_loss = 0.0;
        for (input, mask, target_policy, z) in batch {
            let cache = self.params.forward_cache(input)?;
            total_loss += self
                .params
                .backward(&cache, mask, target_policy, *z, &mut grads)?;
        }
        let scale = 1.0 / batch.len() as f64;
        for g in &mut grads {
            for v in &mut g.data {
                *v *= scale;
                if !v.is_finite() {
                    return Err(NnetError::NonFiniteGradient);
                }
            }
        }
        for ((t, v), g) in self
            .params
            .tensors
            .iter_mut()
            .zip(&mut self.velocity)
            .zip(&grads)
        {
            for i in 0..t.data.len() {
                v.data[i] = self.momentum * v.data[i] - learning_rate * g.data[i];
                t.data[i] += v.data[i];
            }
        }
        self.params.version += 1;
        Ok(total_loss * scale)
    }
}
