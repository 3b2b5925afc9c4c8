//! Policy evaluation: frozen-bounds rollouts, trajectory accounting, the
//! low-friction path ratio, and box-choice counting.

use super::config::FullConfig;
use super::train::HarnessError;
use crate::envs::{episode_seed, Action, Goal, PushEnv, TaskKind, TaskLayout};
use crate::ppo::{argmax_action, sample_action, Checkpoint};
use crate::sim::BoxId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bin count for the alpha histogram over [0, 1].
pub const ALPHA_HISTOGRAM_BINS: usize = 10;

/// Per-step trajectory record: how far the pushed box moved and on which
/// friction it sat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajStep {
    pub pushed_translation: f64,
    pub pushed_mu: Option<f64>,
    pub physical_work: f64,
    pub reward: f64,
}

/// One evaluation episode in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub steps: Vec<TrajStep>,
    /// First step index at which each box left the goal circle (mass task).
    pub exits: Vec<(BoxId, u32)>,
    pub box_masses: Vec<(BoxId, f64)>,
    pub success: bool,
    pub collided: bool,
    pub length: u32,
    pub episode_work: f64,
    pub total_reward: f64,
}

/// Fraction of the box's pushed path length that lay on the low-friction
/// band. Undefined (None) when nothing was pushed.
pub fn alpha_ratio(traj: &TrajectoryLog, low_mu: f64) -> Option<f64> {
    let total: f64 = traj.steps.iter().map(|s| s.pushed_translation).sum();
    if total <= 0.0 {
        return None;
    }
    let low: f64 = traj
        .steps
        .iter()
        .filter(|s| s.pushed_mu == Some(low_mu))
        .map(|s| s.pushed_translation)
        .sum();
    Some(low / total)
}

/// The box the policy chose: the first box to exit the circle; ties go to
/// the lower id. None when no box exited.
pub fn chosen_box(traj: &TrajectoryLog) -> Option<BoxId> {
    traj.exits
        .iter()
        .min_by_key(|(id, step)| (*step, *id))
        .map(|(id, _)| *id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxLabel {
    Light,
    Heavy,
}

impl BoxLabel {
    pub fn name(self) -> &'static str {
        match self {
            BoxLabel::Light => "light",
            BoxLabel::Heavy => "heavy",
        }
    }

    pub fn parse(s: &str) -> Option<BoxLabel> {
        match s {
            "light" => Some(BoxLabel::Light),
            "heavy" => Some(BoxLabel::Heavy),
            _ => None,
        }
    }
}

/// Which box one configuration's policy chose to push.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub config_seed: u64,
    pub label: Option<BoxLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalEpisode {
    pub index: usize,
    pub success: bool,
    pub collided: bool,
    pub length: u32,
    pub episode_work: f64,
    pub total_reward: f64,
    pub alpha: Option<f64>,
    pub chosen: Option<BoxLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: TaskKind,
    pub n_episodes: usize,
    pub success_rate: f64,
    pub mean_success_work: f64,
    pub episodes: Vec<EvalEpisode>,
    pub alphas: Vec<f64>,
    pub alpha_histogram: Vec<HistBin>,
    pub mass_choices: Vec<ChoiceRecord>,
    pub heavy_choice_count: usize,
    /// Heavy-choice counts over consecutive groups of four configurations.
    pub heavy_counts_per_chunk4: Vec<usize>,
}

impl EvalReport {
    /// Derive every aggregate from the raw rows. Used by both the
    /// evaluator and the importer so round trips are exact.
    pub fn assemble(
        task: TaskKind,
        episodes: Vec<EvalEpisode>,
        mass_choices: Vec<ChoiceRecord>,
    ) -> Self {
        let n = episodes.len();
        let successes: Vec<&EvalEpisode> = episodes.iter().filter(|e| e.success).collect();
        let success_rate = if n == 0 {
            0.0
        } else {
            successes.len() as f64 / n as f64
        };
        let mean_success_work = if successes.is_empty() {
            0.0
        } else {
            successes.iter().map(|e| e.episode_work).sum::<f64>() / successes.len() as f64
        };
        let alphas: Vec<f64> = episodes.iter().filter_map(|e| e.alpha).collect();
        let mut alpha_histogram: Vec<HistBin> = (0..ALPHA_HISTOGRAM_BINS)
            .map(|i| HistBin {
                lo: i as f64 / ALPHA_HISTOGRAM_BINS as f64,
                hi: (i + 1) as f64 / ALPHA_HISTOGRAM_BINS as f64,
                count: 0,
            })
            .collect();
        for a in &alphas {
            let bin = ((a * ALPHA_HISTOGRAM_BINS as f64) as usize).min(ALPHA_HISTOGRAM_BINS - 1);
            alpha_histogram[bin].count += 1;
        }
        let heavy_choice_count = mass_choices
            .iter()
            .filter(|c| c.label == Some(BoxLabel::Heavy))
            .count();
        let heavy_counts_per_chunk4 = mass_choices
            .chunks(4)
            .map(|chunk| {
                chunk
                    .iter()
                    .filter(|c| c.label == Some(BoxLabel::Heavy))
                    .count()
            })
            .collect();
        Self {
            task,
            n_episodes: n,
            success_rate,
            mean_success_work,
            episodes,
            alphas,
            alpha_histogram,
            mass_choices,
            heavy_choice_count,
            heavy_counts_per_chunk4,
        }
    }
}

/// Run `n_episodes` with an arbitrary policy and collect trajectories.
/// The policy sees the environment read-only plus the current observation.
pub fn run_episodes(
    env: &mut PushEnv,
    policy: &mut dyn FnMut(&PushEnv, &[f64]) -> Action,
    n_episodes: u32,
    eval_seed: u64,
) -> Result<Vec<TrajectoryLog>, HarnessError> {
    let kind = env.kind();
    let mut out = Vec::with_capacity(n_episodes as usize);
    for ep in 0..n_episodes {
        let mut obs = env.reset(episode_seed(kind, eval_seed, ep as u64, true));
        let mut steps = Vec::new();
        let mut exits: Vec<(BoxId, u32)> = Vec::new();
        let box_masses: Vec<(BoxId, f64)> =
            env.world().boxes.iter().map(|b| (b.id, b.mass)).collect();
        let mut total_reward = 0.0;
        let mut length = 0u32;
        let (success, collided, episode_work) = loop {
            let action = policy(env, obs.as_slice());
            let t = env.step(action)?;
            total_reward += t.reward;
            length += 1;
            steps.push(TrajStep {
                pushed_translation: t.info.pushed_translation,
                pushed_mu: t.info.pushed_mu,
                physical_work: t.info.physical_work,
                reward: t.reward,
            });
            if let Goal::Circle { center, radius } = *env.goal() {
                for b in &env.world().boxes {
                    let outside = b.pose.position().distance(center) > radius;
                    if outside && !exits.iter().any(|(id, _)| *id == b.id) {
                        exits.push((b.id, length));
                    }
                }
            }
            if t.done {
                break (
                    t.info.success,
                    t.info.collided,
                    t.info.episode_work.unwrap_or(0.0),
                );
            }
            obs = t.observation;
        };
        out.push(TrajectoryLog {
            steps,
            exits,
            box_masses,
            success,
            collided,
            length,
            episode_work,
            total_reward,
        });
    }
    Ok(out)
}

fn label_for(traj: &TrajectoryLog) -> Option<BoxLabel> {
    let id = chosen_box(traj)?;
    let mass = traj.box_masses.iter().find(|(b, _)| *b == id)?.1;
    let max_mass = traj
        .box_masses
        .iter()
        .map(|(_, m)| *m)
        .fold(f64::NEG_INFINITY, f64::max);
    Some(if mass == max_mass {
        BoxLabel::Heavy
    } else {
        BoxLabel::Light
    })
}

/// Majority box choice over the successful episodes of one configuration;
/// ties resolve to the earliest episode's choice.
fn config_choice(trajs: &[TrajectoryLog]) -> Option<BoxLabel> {
    let labels: Vec<BoxLabel> = trajs
        .iter()
        .filter(|t| t.success)
        .filter_map(label_for)
        .collect();
    if labels.is_empty() {
        return None;
    }
    let heavy = labels.iter().filter(|l| **l == BoxLabel::Heavy).count();
    let light = labels.len() - heavy;
    if heavy > light {
        Some(BoxLabel::Heavy)
    } else if light > heavy {
        Some(BoxLabel::Light)
    } else {
        Some(labels[0])
    }
}

fn low_mu_of(env: &PushEnv) -> Option<f64> {
    match &env.spec().layout {
        TaskLayout::Friction(f) => Some(f.low_mu),
        TaskLayout::Mass(_) => None,
    }
}

/// Evaluate a trained checkpoint on its task. Bounds are taken from the
/// checkpoint and frozen; `eval_seed` should be the training seed so the
/// mass task keeps its configuration. `deterministic` takes argmax
/// actions instead of sampling.
pub fn evaluate(
    checkpoint: &Checkpoint,
    cfg: &FullConfig,
    n_episodes: u32,
    deterministic: bool,
    eval_seed: u64,
) -> Result<EvalReport, HarnessError> {
    let mut spec = cfg.task.clone();
    cfg.run.variant.apply(&mut spec.reward);
    let mut env = PushEnv::new(spec, cfg.sim)?;
    if checkpoint.params.obs_len() != env.observation_len()
        || checkpoint.params.n_actions() != env.action_count()
    {
        return Err(HarnessError::SpecMismatch(format!(
            "checkpoint network is {}x{}, task needs {}x{}",
            checkpoint.params.obs_len(),
            checkpoint.params.n_actions(),
            env.observation_len(),
            env.action_count()
        )));
    }
    env.restore_bounds(checkpoint.env.step_bounds, checkpoint.env.episode_bounds);
    env.freeze_bounds(true);

    let params = checkpoint.params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(eval_seed ^ 0x5EED_0EA1);
    let mut policy = move |_env: &PushEnv, obs: &[f64]| {
        let (logits, _) = params.forward(obs);
        let idx = if deterministic {
            argmax_action(&logits)
        } else {
            sample_action(&logits, &mut rng).0
        };
        Action::from_index(idx).expect("4 actions")
    };
    let low_mu = low_mu_of(&env);
    let kind = env.kind();
    let trajs = run_episodes(&mut env, &mut policy, n_episodes, eval_seed)?;

    let episodes: Vec<EvalEpisode> = trajs
        .iter()
        .enumerate()
        .map(|(i, t)| EvalEpisode {
            index: i,
            success: t.success,
            collided: t.collided,
            length: t.length,
            episode_work: t.episode_work,
            total_reward: t.total_reward,
            alpha: low_mu.and_then(|mu| alpha_ratio(t, mu)),
            chosen: if kind == TaskKind::VariableMass {
                if t.success {
                    label_for(t)
                } else {
                    None
                }
            } else {
                None
            },
        })
        .collect();
    let mass_choices = if kind == TaskKind::VariableMass {
        vec![ChoiceRecord {
            config_seed: eval_seed,
            label: config_choice(&trajs),
        }]
    } else {
        Vec::new()
    };
    Ok(EvalReport::assemble(kind, episodes, mass_choices))
}

/// Combine per-configuration mass-task reports into one report covering
/// all configurations.
pub fn merge_mass_choices(reports: &[EvalReport]) -> EvalReport {
    let mut episodes = Vec::new();
    let mut choices = Vec::new();
    for r in reports {
        for mut e in r.episodes.iter().copied() {
            e.index = episodes.len();
            episodes.push(e);
        }
        choices.extend(r.mass_choices.iter().copied());
    }
    EvalReport::assemble(TaskKind::VariableMass, episodes, choices)
}
