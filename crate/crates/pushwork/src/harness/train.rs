//! The per-seed training loop: rollout collection, PPO updates, trailing
//! statistics, run logs, and checkpointing with bit-exact resume.

use super::config::FullConfig;
use super::Variant;
use crate::envs::{episode_seed, Action, ConfigError, EnvError, PushEnv, TaskKind};
use crate::ppo::{
    ppo_update, sample_action, AdamState, Checkpoint, CheckpointError, EpisodeRecord,
    PolicyParams, PpoConfig, RngState, RolloutBuffer, TrainStats, UpdateError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

/// Trailing-window length (episodes) for the stats series.
pub const RECENT_EPISODES: usize = 50;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("update diverged for seed {seed}: {source}")]
    Diverged {
        seed: u64,
        #[source]
        source: UpdateError,
    },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint does not match the task spec: {0}")]
    SpecMismatch(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything one training run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub task: TaskKind,
    pub variant: Variant,
    pub seed: u64,
    pub series: Vec<TrainStats>,
    pub episodes: Vec<EpisodeRecord>,
}

impl RunLog {
    /// Success rate over the final `n` completed episodes.
    pub fn final_success_rate(&self, n: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|e| e.success).count() as f64 / tail.len() as f64
    }
}

#[derive(Debug)]
pub struct SeedRun {
    pub log: RunLog,
    pub checkpoint: Checkpoint,
    /// Mid-run checkpoints captured at the configured cadence.
    pub periodic_checkpoints: Vec<Checkpoint>,
}

struct TrainerState {
    env: PushEnv,
    params: PolicyParams,
    adam: AdamState,
    rng: ChaCha8Rng,
    env_steps: u64,
    episode_index: u64,
    episode_return: f64,
    recent: VecDeque<EpisodeRecord>,
    episodes_completed: u64,
}

impl TrainerState {
    fn checkpoint(&self, ppo: PpoConfig) -> Checkpoint {
        Checkpoint {
            ppo,
            params: self.params.clone(),
            adam: self.adam.clone(),
            rng: RngState::capture(&self.rng),
            env_steps: self.env_steps,
            episode_index: self.episode_index,
            episode_return: self.episode_return,
            env: self.env.snapshot(),
            recent_episodes: self.recent.iter().copied().collect(),
        }
    }

    fn stats_row(&self, update: &crate::ppo::UpdateStats) -> TrainStats {
        let n = self.recent.len().max(1) as f64;
        let mean_return = self.recent.iter().map(|e| e.total_reward).sum::<f64>() / n;
        let successes: Vec<&EpisodeRecord> = self.recent.iter().filter(|e| e.success).collect();
        let success_rate = successes.len() as f64 / n;
        let mean_success_energy = if successes.is_empty() {
            0.0
        } else {
            successes.iter().map(|e| e.episode_work).sum::<f64>() / successes.len() as f64
        };
        TrainStats {
            env_steps: self.env_steps,
            mean_return,
            success_rate,
            mean_success_energy,
            policy_loss: update.policy_loss,
            value_loss: update.value_loss,
            entropy: update.entropy,
        }
    }
}

/// Train one seed from scratch, or resume from a checkpoint. Training is
/// single-threaded and fully deterministic in (config, seed); a resumed
/// run continues the unbroken run bit-exactly.
pub fn train_seed(
    cfg: &FullConfig,
    seed: u64,
    resume: Option<Checkpoint>,
) -> Result<SeedRun, HarnessError> {
    let mut spec = cfg.task.clone();
    cfg.run.variant.apply(&mut spec.reward);
    let kind = spec.kind();
    let mut env = PushEnv::new(spec, cfg.sim)?;
    let obs_len = env.observation_len();
    let n_actions = env.action_count();

    let (mut state, ppo) = match resume {
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = PolicyParams::init(obs_len, n_actions, &mut rng);
            let adam = AdamState::new(&params);
            env.reset(episode_seed(kind, seed, 0, false));
            (
                TrainerState {
                    env,
                    params,
                    adam,
                    rng,
                    env_steps: 0,
                    episode_index: 1,
                    episode_return: 0.0,
                    recent: VecDeque::with_capacity(RECENT_EPISODES),
                    episodes_completed: 0,
                },
                cfg.ppo,
            )
        }
        Some(ck) => {
            if ck.params.obs_len() != obs_len || ck.params.n_actions() != n_actions {
                return Err(HarnessError::SpecMismatch(format!(
                    "checkpoint network is {}x{}, task needs {}x{}",
                    ck.params.obs_len(),
                    ck.params.n_actions(),
                    obs_len,
                    n_actions
                )));
            }
            let ppo = ck.ppo;
            env.restore(ck.env);
            let recent: VecDeque<EpisodeRecord> = ck.recent_episodes.iter().copied().collect();
            let episodes_completed = recent.back().map(|e| e.index + 1).unwrap_or(0);
            (
                TrainerState {
                    env,
                    params: ck.params,
                    adam: ck.adam,
                    rng: ck.rng.restore(),
                    env_steps: ck.env_steps,
                    episode_index: ck.episode_index,
                    episode_return: ck.episode_return,
                    recent,
                    episodes_completed,
                },
                ppo,
            )
        }
    };

    let mut log = RunLog {
        task: kind,
        variant: cfg.run.variant,
        seed,
        series: Vec::new(),
        episodes: Vec::new(),
    };
    let mut periodic = Vec::new();
    let rollout_len = ppo.rollout_length;
    let mut obs = state.env.observe();

    while state.env_steps < ppo.total_env_steps {
        let mut buffer = RolloutBuffer::with_capacity(rollout_len);
        for _ in 0..rollout_len {
            let (logits, value) = state.params.forward(obs.as_slice());
            let (action_idx, log_prob) = sample_action(&logits, &mut state.rng);
            let action = Action::from_index(action_idx).expect("4 actions");
            let t = state.env.step(action)?;
            state.env_steps += 1;
            state.episode_return += t.reward;
            buffer.push(
                obs.0,
                action_idx,
                log_prob,
                t.reward,
                value,
                t.done,
            );
            if t.done {
                let record = EpisodeRecord {
                    index: state.episodes_completed,
                    end_step: state.env_steps,
                    length: state.env.snapshot().episode_steps,
                    total_reward: state.episode_return,
                    success: t.info.success,
                    collided: t.info.collided,
                    episode_work: t.info.episode_work.unwrap_or(0.0),
                };
                log.episodes.push(record);
                if state.recent.len() == RECENT_EPISODES {
                    state.recent.pop_front();
                }
                state.recent.push_back(record);
                state.episodes_completed += 1;
                state.episode_return = 0.0;
                obs = state
                    .env
                    .reset(episode_seed(kind, seed, state.episode_index, false));
                state.episode_index += 1;
            } else {
                obs = t.observation;
            }
        }
        let (_, bootstrap) = state.params.forward(obs.as_slice());
        buffer.bootstrap_value = bootstrap;

        let update = ppo_update(
            &mut state.params,
            &mut state.adam,
            &buffer,
            &ppo,
            &mut state.rng,
        )
        .map_err(|source| HarnessError::Diverged { seed, source })?;

        let update_count = state.env_steps / rollout_len as u64;
        if update_count % cfg.run.log_every_updates.max(1) as u64 == 0 {
            log.series.push(state.stats_row(&update));
        }
        if let Some(every) = cfg.run.checkpoint_every_updates {
            if every > 0 && update_count % every as u64 == 0 {
                periodic.push(state.checkpoint(ppo));
            }
        }
    }

    let checkpoint = state.checkpoint(ppo);
    Ok(SeedRun {
        log,
        checkpoint,
        periodic_checkpoints: periodic,
    })
}

/// Train all configured seeds (in parallel; each run is independent and
/// deterministic). Results come back in seed order.
pub fn train(cfg: &FullConfig) -> Result<Vec<SeedRun>, HarnessError> {
    let mut results: Vec<(u64, Result<SeedRun, HarnessError>)> = cfg
        .run
        .seeds
        .par_iter()
        .map(|&seed| (seed, train_seed(cfg, seed, None)))
        .collect();
    results.sort_by_key(|(seed, _)| *seed);
    results.into_iter().map(|(_, r)| r).collect()
}
