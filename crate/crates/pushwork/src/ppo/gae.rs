//! Rollout storage and generalized advantage estimation.

use serde::{Deserialize, Serialize};

/// On-policy trajectory slice of fixed length, plus the bootstrap value of
/// the state following the last entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutBuffer {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub bootstrap_value: f64,
}

impl RolloutBuffer {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            observations: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            bootstrap_value: 0.0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        observation: Vec<f64>,
        action: usize,
        log_prob: f64,
        reward: f64,
        value: f64,
        done: bool,
    ) {
        self.observations.push(observation);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.values.clear();
        self.dones.clear();
        self.bootstrap_value = 0.0;
    }
}

/// Backward GAE recursion:
/// `delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t`,
/// `A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}`.
/// Returns `(advantages, returns)` with `returns = advantages + values`
/// elementwise.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = buffer.len();
    let mut advantages = vec![0.0; n];
    let mut next_advantage = 0.0;
    for t in (0..n).rev() {
        let not_done = if buffer.dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n {
            buffer.values[t + 1]
        } else {
            buffer.bootstrap_value
        };
        let delta = buffer.rewards[t] + gamma * next_value * not_done - buffer.values[t];
        next_advantage = delta + gamma * lambda * not_done * next_advantage;
        advantages[t] = next_advantage;
    }
    let returns = advantages
        .iter()
        .zip(buffer.values.iter())
        .map(|(a, v)| a + v)
        .collect();
    (advantages, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buffer_from(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64) -> RolloutBuffer {
        let mut b = RolloutBuffer::with_capacity(rewards.len());
        for i in 0..rewards.len() {
            b.push(vec![0.0], 0, 0.0, rewards[i], values[i], dones[i]);
        }
        b.bootstrap_value = bootstrap;
        b
    }

    #[test]
    fn single_terminal_step() {
        let b = buffer_from(&[2.0], &[0.7], &[true], 99.0);
        let (adv, ret) = compute_gae(&b, 0.99, 0.95);
        assert_eq!(adv, vec![2.0 - 0.7]);
        assert_eq!(ret, vec![2.0 - 0.7 + 0.7]);
    }

    #[test]
    fn lambda_zero_collapses_to_td_residuals() {
        let b = buffer_from(
            &[1.0, -0.5, 0.25, 2.0],
            &[0.3, 0.1, -0.2, 0.4],
            &[false, false, false, false],
            0.6,
        );
        let (adv, _) = compute_gae(&b, 0.9, 0.0);
        for t in 0..4 {
            let next_v = if t + 1 < 4 { b.values[t + 1] } else { 0.6 };
            let delta = b.rewards[t] + 0.9 * next_v - b.values[t];
            assert!((adv[t] - delta).abs() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn three_step_hand_trace() {
        let b = buffer_from(&[1.0, 0.0, 1.0], &[0.5, 0.2, 0.1], &[false; 3], 0.0);
        let (adv, ret) = compute_gae(&b, 0.9, 0.8);

        // Hand recursion with the same arithmetic order.
        let d2 = 1.0 + 0.9 * 0.0 - 0.1;
        let a2 = d2;
        let d1 = 0.0 + 0.9 * 0.1 - 0.2;
        let a1 = d1 + 0.9 * 0.8 * a2;
        let d0 = 1.0 + 0.9 * 0.2 - 0.5;
        let a0 = d0 + 0.9 * 0.8 * a1;
        assert!((adv[0] - a0).abs() < 1e-12);
        assert!((adv[1] - a1).abs() < 1e-12);
        assert!((adv[2] - a2).abs() < 1e-12);
        assert!((adv[0] - 1.06736).abs() < 1e-9);
        assert!((adv[1] - 0.538).abs() < 1e-9);
        assert!((adv[2] - 0.9).abs() < 1e-9);

        // Identity: returns = advantages + values, exactly as computed.
        for t in 0..3 {
            assert_eq!(ret[t], adv[t] + b.values[t]);
        }
    }

    #[test]
    fn done_zeroes_bootstrap() {
        let b = buffer_from(&[1.0, 1.0], &[0.5, 0.5], &[true, false], 10.0);
        let (adv, _) = compute_gae(&b, 0.9, 0.8);
        // First step is terminal: no bleed-through from the second.
        assert!((adv[0] - (1.0 - 0.5)).abs() < 1e-15);
    }
}
