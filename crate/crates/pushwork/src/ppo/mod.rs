//! Self-contained PPO: rollout collection lives in the harness; this
//! module owns the network, GAE, the clipped-surrogate update, and the
//! checkpoint container.

mod checkpoint;
mod gae;
mod net;
mod update;

pub use checkpoint::{Checkpoint, CheckpointError, EpisodeRecord, RngState, CHECKPOINT_VERSION};
pub use gae::{compute_gae, RolloutBuffer};
pub use net::{clip_global_norm, AdamState, ForwardCache, Matrix, PolicyParams, HIDDEN};
pub use update::{
    argmax_action, clipped_surrogate, entropy_of, gradient_check, gradient_check_against,
    log_softmax, loss_and_grad, loss_only, normalize_advantages, ppo_update, sample_action,
    LossParts, TrainBatch, UpdateError, UpdateStats,
};

use serde::{Deserialize, Serialize};

fn default_advantage_eps() -> f64 {
    1e-8
}

/// PPO hyperparameters. Defaults are conventional settings sized for
/// desk-scale runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub discount_gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub rollout_length: usize,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub max_grad_norm: f64,
    pub total_env_steps: u64,
    pub rng_seed: u64,
    #[serde(default = "default_advantage_eps")]
    pub advantage_eps: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            discount_gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            learning_rate: 3e-4,
            rollout_length: 2048,
            update_epochs: 10,
            minibatch_size: 64,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            max_grad_norm: 0.5,
            total_env_steps: 300_000,
            rng_seed: 0,
            advantage_eps: 1e-8,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.discount_gamma) {
            return Err("discount_gamma must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err("gae_lambda must lie in [0, 1]".into());
        }
        if self.clip_epsilon <= 0.0 {
            return Err("clip_epsilon must be positive".into());
        }
        if self.learning_rate <= 0.0 {
            return Err("learning_rate must be positive".into());
        }
        if self.rollout_length == 0 || self.minibatch_size == 0 || self.update_epochs == 0 {
            return Err("rollout_length, minibatch_size and update_epochs must be positive".into());
        }
        Ok(())
    }
}

/// One row of the training time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub env_steps: u64,
    pub mean_return: f64,
    pub success_rate: f64,
    pub mean_success_energy: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}
