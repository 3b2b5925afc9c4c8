//! Clipped-surrogate PPO update and its finite-difference gradient check.

use super::gae::{compute_gae, RolloutBuffer};
use super::net::{clip_global_norm, AdamState, PolicyParams};
use super::PpoConfig;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UpdateError {
    #[error("non-finite loss at epoch {epoch}, minibatch {minibatch}: policy {policy}, value {value}, entropy {entropy}")]
    NonFiniteLoss {
        epoch: usize,
        minibatch: usize,
        policy: f64,
        value: f64,
        entropy: f64,
    },
    #[error("rollout buffer is empty")]
    EmptyBuffer,
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - max - log_sum).collect()
}

/// Entropy of the categorical distribution given by `log_probs`.
pub fn entropy_of(log_probs: &[f64]) -> f64 {
    -log_probs.iter().map(|lp| lp.exp() * lp).sum::<f64>()
}

/// Sample an action index from the softmax of `logits`; returns the index
/// and its log-probability.
pub fn sample_action(logits: &[f64], rng: &mut impl Rng) -> (usize, f64) {
    let log_probs = log_softmax(logits);
    debug_assert!(
        (log_probs.iter().map(|lp| lp.exp()).sum::<f64>() - 1.0).abs() < 1e-12,
        "softmax probabilities must sum to 1"
    );
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, lp) in log_probs.iter().enumerate() {
        cumulative += lp.exp();
        if u < cumulative {
            return (i, *lp);
        }
    }
    let last = log_probs.len() - 1;
    (last, log_probs[last])
}

/// Deterministic greedy action (ties resolve to the lowest index).
pub fn argmax_action(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, l) in logits.iter().enumerate() {
        if *l > logits[best] {
            best = i;
        }
    }
    best
}

/// The pessimistic clipped surrogate `min(ratio * A, clip(ratio) * A)`.
/// The flag reports whether the unclipped branch was selected, which is
/// where the policy gradient flows.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_epsilon: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantage;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

/// Mean-zero, unit-variance advantages with an epsilon-guarded deviation.
/// A constant batch normalizes to exactly zero.
pub fn normalize_advantages(advantages: &[f64], eps: f64) -> Vec<f64> {
    let lo = advantages.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = advantages.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return vec![0.0; advantages.len()];
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt() + eps;
    advantages.iter().map(|a| (a - mean) / std).collect()
}

/// A view of training samples by index into shared columns.
pub struct TrainBatch<'a> {
    pub observations: &'a [Vec<f64>],
    pub actions: &'a [usize],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Mean loss over `idx` and its gradient accumulated into `grads`:
/// `-surrogate + value_coeff * (V - R)^2 - entropy_coeff * H`.
pub fn loss_and_grad(
    params: &PolicyParams,
    batch: &TrainBatch,
    idx: &[usize],
    cfg: &PpoConfig,
    grads: &mut PolicyParams,
) -> LossParts {
    let n = idx.len() as f64;
    let mut parts = LossParts::default();
    let mut d_logits = vec![0.0; params.n_actions()];

    for &i in idx {
        let cache = params.forward_cached(&batch.observations[i]);
        let (logits, value) = params.heads(&cache);
        let log_probs = log_softmax(&logits);
        let action = batch.actions[i];
        let ratio = (log_probs[action] - batch.old_log_probs[i]).exp();
        let advantage = batch.advantages[i];
        let (surrogate, unclipped_active) = clipped_surrogate(ratio, advantage, cfg.clip_epsilon);
        let value_err = value - batch.returns[i];
        let entropy = entropy_of(&log_probs);

        parts.policy += -surrogate;
        parts.value += value_err * value_err;
        parts.entropy += entropy;
        if !unclipped_active {
            parts.clip_fraction += 1.0;
        }

        // d(-surrogate)/d logits: flows only through the unclipped branch.
        // d ratio / d z_k = ratio * (1[k == a] - p_k).
        for (k, d) in d_logits.iter_mut().enumerate() {
            let p_k = log_probs[k].exp();
            let indicator = if k == action { 1.0 } else { 0.0 };
            let mut g = 0.0;
            if unclipped_active {
                g += -advantage * ratio * (indicator - p_k);
            }
            // d(-entropy_coeff * H)/d z_k = entropy_coeff * p_k * (log p_k + H).
            g += cfg.entropy_coeff * p_k * (log_probs[k] + entropy);
            *d = g / n;
        }
        let d_value = cfg.value_coeff * 2.0 * value_err / n;
        params.backward(&cache, &d_logits, d_value, grads);
    }

    parts.policy /= n;
    parts.value /= n;
    parts.entropy /= n;
    parts.clip_fraction /= n;
    parts.total = parts.policy + cfg.value_coeff * parts.value - cfg.entropy_coeff * parts.entropy;
    parts
}

/// Loss only, used by the finite-difference probes.
pub fn loss_only(params: &PolicyParams, batch: &TrainBatch, idx: &[usize], cfg: &PpoConfig) -> f64 {
    let mut scratch = params.zeros_like();
    loss_and_grad(params, batch, idx, cfg, &mut scratch).total
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// One PPO update over the rollout: GAE, batch-level advantage
/// normalization, then `update_epochs` passes of shuffled minibatch
/// gradient steps through Adam with global-norm clipping.
pub fn ppo_update(
    params: &mut PolicyParams,
    adam: &mut AdamState,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut impl Rng,
) -> Result<UpdateStats, UpdateError> {
    if buffer.is_empty() {
        return Err(UpdateError::EmptyBuffer);
    }
    let (advantages, returns) = compute_gae(buffer, cfg.discount_gamma, cfg.gae_lambda);
    let advantages = normalize_advantages(&advantages, cfg.advantage_eps);
    let batch = TrainBatch {
        observations: &buffer.observations,
        actions: &buffer.actions,
        old_log_probs: &buffer.log_probs,
        advantages: &advantages,
        returns: &returns,
    };

    let n = buffer.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = params.zeros_like();
    let mut stats = UpdateStats::default();
    let mut updates = 0usize;

    for epoch in 0..cfg.update_epochs {
        order.shuffle(rng);
        for (mb, chunk) in order.chunks(cfg.minibatch_size.max(1)).enumerate() {
            grads.set_zero();
            let parts = loss_and_grad(params, &batch, chunk, cfg, &mut grads);
            if !parts.total.is_finite() {
                return Err(UpdateError::NonFiniteLoss {
                    epoch,
                    minibatch: mb,
                    policy: parts.policy,
                    value: parts.value,
                    entropy: parts.entropy,
                });
            }
            let norm = clip_global_norm(&mut grads, cfg.max_grad_norm);
            adam.step(params, &grads, cfg.learning_rate);
            stats.policy_loss += parts.policy;
            stats.value_loss += parts.value;
            stats.entropy += parts.entropy;
            stats.clip_fraction += parts.clip_fraction;
            stats.grad_norm += norm;
            updates += 1;
        }
    }

    let scale = 1.0 / updates.max(1) as f64;
    stats.policy_loss *= scale;
    stats.value_loss *= scale;
    stats.entropy *= scale;
    stats.clip_fraction *= scale;
    stats.grad_norm *= scale;
    Ok(stats)
}

/// Compare `candidate` gradients against central finite differences of the
/// loss over a deterministic subset of coordinates (about `probes` per
/// tensor). The error metric is `|a - n| / max(1, |a|, |n|)`.
pub fn gradient_check_against(
    params: &PolicyParams,
    batch: &TrainBatch,
    idx: &[usize],
    cfg: &PpoConfig,
    epsilon: f64,
    candidate: &PolicyParams,
    probes: usize,
) -> f64 {
    let mut work = params.clone();
    let mut max_err = 0.0f64;
    let shapes: Vec<(usize, usize)> = params
        .tensor_views()
        .iter()
        .map(|(_, s, _)| (s.len(), 0))
        .collect();
    for (t, (len, _)) in shapes.iter().enumerate() {
        let stride = (len / probes).max(1);
        let mut k = 0;
        while k < *len {
            let orig = work.tensor_views_mut()[t].1[k];
            work.tensor_views_mut()[t].1[k] = orig + epsilon;
            let plus = loss_only(&work, batch, idx, cfg);
            work.tensor_views_mut()[t].1[k] = orig - epsilon;
            let minus = loss_only(&work, batch, idx, cfg);
            work.tensor_views_mut()[t].1[k] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let analytic = candidate.tensor_views()[t].1[k];
            let err = (analytic - numeric).abs() / 1.0f64.max(analytic.abs()).max(numeric.abs());
            max_err = max_err.max(err);
            k += stride;
        }
    }
    max_err
}

/// Full self-check: backprop gradient of the loss versus central
/// differences. Returns the maximum relative error over the probed
/// coordinates.
pub fn gradient_check(
    params: &PolicyParams,
    batch: &TrainBatch,
    idx: &[usize],
    cfg: &PpoConfig,
    epsilon: f64,
) -> f64 {
    let mut analytic = params.zeros_like();
    loss_and_grad(params, batch, idx, cfg, &mut analytic);
    gradient_check_against(params, batch, idx, cfg, epsilon, &analytic, 12)
}
