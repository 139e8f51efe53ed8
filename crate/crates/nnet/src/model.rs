use crate::{NnetError, PROB_FLOOR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    /// N + 1 occupancy planes.
    pub input_planes: usize,
    pub height: usize,
    pub width: usize,
    pub conv_layers: usize,
    pub channels: usize,
    /// N * W' flat action space.
    pub action_space: usize,
}

impl NetConfig {
    pub fn input_len(&self) -> usize {
        self.input_planes * self.height * self.width
    }

    fn feature_len(&self) -> usize {
        self.channels * self.height * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros_like(&self) -> Tensor {
        Tensor {
            name: self.name.clone(),
            shape: self.shape.clone(),
            data: vec![0.0; self.data.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetOutput {
    /// Probabilities over the flat action space; illegal entries exactly 0.
    pub policy: Vec<f64>,
    /// tanh-squashed scalar in [-1, 1].
    pub value: f64,
}

/// Named parameter tensors in a fixed order:
/// conv{i}.weight/.bias, policy.weight/.bias, value.weight/.bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: NetConfig,
    pub version: u64,
    pub tensors: Vec<Tensor>,
}

fn uniform_fan_in(rng: &mut ChaCha8Rng, fan_in: usize, len: usize) -> Vec<f64> {
    let bound = (1.0 / fan_in as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

impl ModelParams {
    /// Seeded scaled-uniform fan-in initialization.
    pub fn init(config: NetConfig, seed: u64) -> ModelParams {
        assert!(config.conv_layers >= 1 && config.channels >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = Vec::new();
        for layer in 0..config.conv_layers {
            let in_ch = if layer == 0 {
                config.input_planes
            } else {
                config.channels
            };
            let fan_in = in_ch * 9;
            tensors.push(Tensor {
                name: format!("conv{layer}.weight"),
                shape: vec![config.channels, in_ch, 3, 3],
                data: uniform_fan_in(&mut rng, fan_in, config.channels * in_ch * 9),
            });
            tensors.push(Tensor {
                name: format!("conv{layer}.bias"),
                shape: vec![config.channels],
                data: vec![0.0; config.channels],
            });
        }
        let feat = config.feature_len();
        tensors.push(Tensor {
            name: "policy.weight".into(),
            shape: vec![config.action_space, feat],
            data: uniform_fan_in(&mut rng, feat, config.action_space * feat),
        });
        tensors.push(Tensor {
            name: "policy.bias".into(),
            shape: vec![config.action_space],
            data: vec![0.0; config.action_space],
        });
        tensors.push(Tensor {
            name: "value.weight".into(),
            shape: vec![1, feat],
            data: uniform_fan_in(&mut rng, feat, feat),
        });
        tensors.push(Tensor {
            name: "value.bias".into(),
            shape: vec![1],
            data: vec![0.0; 1],
        });
        ModelParams {
            config,
            version: 0,
            tensors,
        }
    }

    pub fn zero_like_tensors(&self) -> Vec<Tensor> {
        self.tensors.iter().map(Tensor::zeros_like).collect()
    }

    fn tensor(&self, idx: usize) -> &Tensor {
        &self.tensors[idx]
    }

    /// Masked inference: policy over legal actions, value in [-1, 1].
    pub fn forward(&self, input: &[f64], mask: &[bool]) -> Result<NetOutput, NnetError> {
        let cache = self.forward_cache(input)?;
        let policy = masked_softmax(&cache.logits, mask)?;
        Ok(NetOutput {
            policy,
            value: cache.value,
        })
    }

    pub(crate) fn forward_cache(&self, input: &[f64]) -> Result<ForwardCache, NnetError> {
        let cfg = &self.config;
        if input.len() != cfg.input_len() {
            return Err(NnetError::ShapeMismatch {
                got: input.len(),
                want: cfg.input_len(),
            });
        }
        let plane = cfg.height * cfg.width;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(cfg.conv_layers + 1);
        acts.push(input.to_vec());
        for layer in 0..cfg.conv_layers {
            let in_ch = if layer == 0 {
                cfg.input_planes
            } else {
                cfg.channels
            };
            let weight = &self.tensor(2 * layer).data;
            let bias = &self.tensor(2 * layer + 1).data;
            let mut out = vec![0.0; cfg.channels * plane];
            conv3x3(
                &acts[layer],
                weight,
                bias,
                in_ch,
                cfg.channels,
                cfg.height,
                cfg.width,
                &mut out,
            );
            for v in &mut out {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            acts.push(out);
        }
        let feat = acts.last().unwrap();
        let pw = &self.tensor(2 * cfg.conv_layers).data;
        let pb = &self.tensor(2 * cfg.conv_layers + 1).data;
        let mut logits = vec![0.0; cfg.action_space];
        for (a, logit) in logits.iter_mut().enumerate() {
            let row = &pw[a * feat.len()..(a + 1) * feat.len()];
            *logit = pb[a] + dot(row, feat);
        }
        let vw = &self.tensor(2 * cfg.conv_layers + 2).data;
        let vb = &self.tensor(2 * cfg.conv_layers + 3).data;
        let value_pre = vb[0] + dot(vw, feat);
        Ok(ForwardCache {
            acts,
            logits,
            value: value_pre.tanh(),
        })
    }

    /// Loss and parameter gradients for one sample, accumulated into `grads`.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache,
        mask: &[bool],
        target_policy: &[f64],
        z: f64,
        grads: &mut [Tensor],
    ) -> Result<f64, NnetError> {
        let cfg = &self.config;
        let plane = cfg.height * cfg.width;
        let policy = masked_softmax(&cache.logits, mask)?;

        let mut loss = (cache.value - z).powi(2);
        for (p, t) in policy.iter().zip(target_policy) {
            if *t > 0.0 {
                loss -= t * p.max(PROB_FLOOR).ln();
            }
        }

        // Head gradients.
        let d_value_pre = 2.0 * (cache.value - z) * (1.0 - cache.value * cache.value);
        let d_logits: Vec<f64> = policy
            .iter()
            .zip(target_policy)
            .zip(mask)
            .map(|((p, t), &legal)| if legal { p - t } else { 0.0 })
            .collect();

        let feat = cache.acts.last().unwrap();
        let feat_len = feat.len();
        let pw = &self.tensor(2 * cfg.conv_layers).data;
        let vw = &self.tensor(2 * cfg.conv_layers + 2).data;

        let mut d_feat = vec![0.0; feat_len];
        let (conv_grads, head_grads) = grads.split_at_mut(2 * cfg.conv_layers);
        {
            let (g_pw, rest) = head_grads.split_at_mut(1);
            let (g_pb, rest) = rest.split_at_mut(1);
            let (g_vw, g_vb) = rest.split_at_mut(1);
            for (a, &dl) in d_logits.iter().enumerate() {
                if dl == 0.0 {
                    continue;
                }
                g_pb[0].data[a] += dl;
                let row = &pw[a * feat_len..(a + 1) * feat_len];
                let g_row = &mut g_pw[0].data[a * feat_len..(a + 1) * feat_len];
                for i in 0..feat_len {
                    g_row[i] += dl * feat[i];
                    d_feat[i] += dl * row[i];
                }
            }
            let g_vw = &mut g_vw[0].data;
            for i in 0..feat_len {
                g_vw[i] += d_value_pre * feat[i];
                d_feat[i] += d_value_pre * vw[i];
            }
            g_vb[0].data[0] += d_value_pre;
        }

        // Conv stack, last layer first.
        let mut d_out = d_feat;
        for layer in (0..cfg.conv_layers).rev() {
            let in_ch = if layer == 0 {
                cfg.input_planes
            } else {
                cfg.channels
            };
            // ReLU: gradient passes only where the activation survived.
            let act = &cache.acts[layer + 1];
            for (d, &a) in d_out.iter_mut().zip(act) {
                if a == 0.0 {
                    *d = 0.0;
                }
            }
            let mut d_in = vec![0.0; in_ch * plane];
            let (g_w, g_b) = conv_grads[2 * layer..2 * layer + 2].split_at_mut(1);
            conv3x3_backward(
                &cache.acts[layer],
                &self.tensor(2 * layer).data,
                &d_out,
                in_ch,
                cfg.channels,
                cfg.height,
                cfg.width,
                &mut g_w[0].data,
                &mut g_b[0].data,
                &mut d_in,
            );
            d_out = d_in;
        }
        Ok(loss)
    }
}

pub(crate) struct ForwardCache {
    /// acts[0] is the input; acts[l + 1] is the post-ReLU output of layer l.
    pub acts: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub value: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn masked_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>, NnetError> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(NnetError::AllIllegal);
    }
    let mut out = vec![0.0; logits.len()];
    let mut total = 0.0;
    for (i, (&l, &m)) in logits.iter().zip(mask).enumerate() {
        if m {
            let e = (l - max).exp();
            out[i] = e;
            total += e;
        }
    }
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// Same-padded 3x3 convolution; `out` must be zeroed or will be overwritten.
#[allow(clippy::too_many_arguments)]
fn conv3x3(
    input: &[f64],
    weight: &[f64],
    bias: &[f64],
    in_ch: usize,
    out_ch: usize,
    h: usize,
    w: usize,
    out: &mut [f64],
) {
    let plane = h * w;
    for o in 0..out_ch {
        let out_plane = &mut out[o * plane..(o + 1) * plane];
        out_plane.fill(bias[o]);
        for i in 0..in_ch {
            let in_plane = &input[i * plane..(i + 1) * plane];
            let kernel = &weight[(o * in_ch + i) * 9..(o * in_ch + i + 1) * 9];
            for (k, &kv) in kernel.iter().enumerate() {
                if kv == 0.0 {
                    continue;
                }
                let (dr, dc) = ((k / 3) as isize - 1, (k % 3) as isize - 1);
                for r in 0..h as isize {
                    let sr = r + dr;
                    if sr < 0 || sr >= h as isize {
                        continue;
                    }
                    let c_lo = 0.max(-dc) as usize;
                    let c_hi = w - 0.max(dc) as usize;
                    let out_row = &mut out_plane[r as usize * w..(r as usize + 1) * w];
                    let in_row = &in_plane[sr as usize * w..(sr as usize + 1) * w];
                    for c in c_lo..c_hi {
                        out_row[c] += kv * in_row[(c as isize + dc) as usize];
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv3x3_backward(
    input: &[f64],
    weight: &[f64],
    d_out: &[f64],
    in_ch: usize,
    out_ch: usize,
    h: usize,
    w: usize,
    d_weight: &mut [f64],
    d_bias: &mut [f64],
    d_in: &mut [f64],
) {
    let plane = h * w;
    for o in 0..out_ch {
        let d_out_plane = &d_out[o * plane..(o + 1) * plane];
        d_bias[o] += d_out_plane.iter().sum::<f64>();
        for i in 0..in_ch {
            let in_plane = &input[i * plane..(i + 1) * plane];
            let d_in_plane = &mut d_in[i * plane..(i + 1) * plane];
            let kernel = &weight[(o * in_ch + i) * 9..(o * in_ch + i + 1) * 9];
            let d_kernel = &mut d_weight[(o * in_ch + i) * 9..(o * in_ch + i + 1) * 9];
            for k in 0..9 {
                let (dr, dc) = ((k / 3) as isize - 1, (k % 3) as isize - 1);
                let kv = kernel[k];
                let mut dk = 0.0;
                for r in 0..h as isize {
                    let sr = r + dr;
                    if sr < 0 || sr >= h as isize {
                        continue;
                    }
                    let c_lo = 0.max(-dc) as usize;
                    let c_hi = w - 0.max(dc) as usize;
                    let d_out_row = &d_out_plane[r as usize * w..(r as usize + 1) * w];
                    let in_row = &in_plane[sr as usize * w..(sr as usize + 1) * w];
                    let d_in_row = &mut d_in_plane[sr as usize * w..(sr as usize + 1) * w];
                    for c in c_lo..c_hi {
                        let src = (c as isize + dc) as usize;
                        dk += d_out_row[c] * in_row[src];
                        d_in_row[src] += d_out_row[c] * kv;
                    }
                }
                d_kernel[k] += dk;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> NetConfig {
        NetConfig {
            input_planes: 3,
            height: 4,
            width: 4,
            conv_layers: 2,
            channels: 4,
            action_space: 8,
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let params = ModelParams::init(tiny_config(), 7);
        let input: Vec<f64> = (0..params.config.input_len())
            .map(|i| (i % 2) as f64)
            .collect();
        let mask = vec![true; 8];
        let a = params.forward(&input, &mask).unwrap();
        let b = params.forward(&input, &mask).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_mask_gives_probability_one() {
        let params = ModelParams::init(tiny_config(), 1);
        let input = vec![0.5; params.config.input_len()];
        let mut mask = vec![false; 8];
        mask[3] = true;
        let out = params.forward(&input, &mask).unwrap();
        assert_eq!(out.policy[3], 1.0);
        assert!(out.policy.iter().enumerate().all(|(i, &p)| i == 3 || p == 0.0));
    }

    #[test]
    fn equal_logits_split_evenly() {
        let probs = masked_softmax(&[2.0, 2.0, 5.0], &[true, true, false]).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-15);
        assert!((probs[1] - 0.5).abs() < 1e-15);
        assert_eq!(probs[2], 0.0);
    }

    #[test]
    fn all_illegal_mask_rejected() {
        let params = ModelParams::init(tiny_config(), 1);
        let input = vec![0.0; params.config.input_len()];
        assert!(matches!(
            params.forward(&input, &vec![false; 8]),
            Err(NnetError::AllIllegal)
        ));
    }

    #[test]
    fn random_outputs_are_proper_distributions() {
        use rand::{Rng, SeedableRng};
        let params = ModelParams::init(tiny_config(), 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let input: Vec<f64> = (0..params.config.input_len())
                .map(|_| rng.gen_range(0..2) as f64)
                .collect();
            let mut mask: Vec<bool> = (0..8).map(|_| rng.gen_bool(0.5)).collect();
            if mask.iter().all(|&m| !m) {
                mask[0] = true;
            }
            let out = params.forward(&input, &mask).unwrap();
            assert!(out.value.is_finite() && out.value.abs() <= 1.0);
            let sum: f64 = out.policy.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            assert!(out.policy.iter().all(|&p| p.is_finite() && p >= 0.0));
            for (p, m) in out.policy.iter().zip(&mask) {
                assert!(*m || *p == 0.0);
            }
        }
    }
}
