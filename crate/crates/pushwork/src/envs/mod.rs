//! The two pushing tasks as episodic RL environments.
//!
//! Both tasks share the same mechanics: a disc robot pushes boxes around a
//! walled room under one of four wheel commands. They differ in goal and
//! reward. The friction task prices every pushing step by its normalized
//! work `c(t)`; the mass task prices the whole episode at success time by
//! its normalized total work `c(tau)`. Cost source and normalization mode
//! are switchable per run, which is what the ablation variants toggle.

mod task;

pub use crate::sim::Action;
pub use task::{
    fixed_bounds, BoxShape, ConfigError, FixedBounds, FrictionLayout, Goal, MassLayout,
    RobotGeometry, SceneSpec, SpawnZone, TaskKind, TaskLayout, TaskSpec,
};

use crate::cost::{
    accumulate_episode, step_work, ContactPatch, RunningBounds, STANDARD_GRAVITY,
};
use crate::geom::{Rect, Vec2};
use crate::sim::{
    step_world, wheel_command, BoxBody, BoxId, Pose2D, RobotBody, SimConfig, WorldState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("environment must be reset before stepping")]
    NotReset,
    #[error("episode is done; reset before stepping again")]
    EpisodeDone,
    #[error("successful mass-task step without an episode cost")]
    MissingEpisodeCost,
}

/// What energy the cost signal is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSource {
    /// Friction work of the pushed box (the physical cost).
    PushingEnergy,
    /// Wheel-effort proxy for the robot's own output energy.
    RobotEnergy,
    /// No cost signal: step cost pinned to 1, episode cost pinned to 0.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    Running,
    Fixed,
}

/// Reward constants and the ablation switches. All constants come from the
/// run configuration; nothing is inlined at call sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// R: paid on success (friction task) or scaled by 1 - c(tau) (mass task).
    pub success_reward: f64,
    /// r_n: paid when the robot collides with an obstacle.
    pub collision_penalty: f64,
    /// r_e: paid on plain time-elapse steps.
    pub time_penalty: f64,
    /// r_p: multiplies c(t) on pushing steps of the friction task.
    pub push_coeff: f64,
    pub cost_source: CostSource,
    pub bound_mode: BoundMode,
    /// Alternate reading of the pushing case that prices r_p * c(t)^2.
    #[serde(default)]
    pub squared_push_cost: bool,
    /// Joules per radian of commanded wheel rotation for the robot-energy
    /// cost source.
    pub robot_energy_coeff: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            success_reward: 10.0,
            collision_penalty: -10.0,
            time_penalty: -1.0,
            push_coeff: -0.5,
            cost_source: CostSource::PushingEnergy,
            bound_mode: BoundMode::Running,
            squared_push_cost: false,
            robot_energy_coeff: 1.0,
        }
    }
}

/// Fixed-length observation vector, all entries in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Mutually exclusive step outcomes, in reward precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepPredicates {
    pub success: bool,
    pub collided: bool,
    pub pushed: bool,
}

/// Friction-task reward: success > collision > pushing > otherwise.
/// Pushing pays `push_coeff * c(t)` (or `* c(t)^2` under the squared
/// reading).
pub fn reward_variable_friction(p: &StepPredicates, step_cost: f64, cfg: &RewardConfig) -> f64 {
    debug_assert!((0.0..=1.0).contains(&step_cost));
    if p.success {
        cfg.success_reward
    } else if p.collided {
        cfg.collision_penalty
    } else if p.pushed {
        let c = if cfg.squared_push_cost {
            step_cost * step_cost
        } else {
            step_cost
        };
        cfg.push_coeff * c
    } else {
        cfg.time_penalty
    }
}

/// Mass-task reward: success pays `R * (1 - c(tau))`, collision pays the
/// penalty, everything else pays the time-elapse constant (zero in the
/// default config).
pub fn reward_variable_mass(
    p: &StepPredicates,
    episode_cost: Option<f64>,
    cfg: &RewardConfig,
) -> Result<f64, EnvError> {
    if p.success {
        let c = episode_cost.ok_or(EnvError::MissingEpisodeCost)?;
        debug_assert!((0.0..=1.0).contains(&c));
        Ok(cfg.success_reward * (1.0 - c))
    } else if p.collided {
        Ok(cfg.collision_penalty)
    } else {
        Ok(cfg.time_penalty)
    }
}

/// Friction-task success: a box centroid inside the goal rectangle,
/// boundary inclusive.
pub fn success_friction(world: &WorldState, goal: &Rect) -> bool {
    world.boxes.iter().any(|b| goal.contains(b.pose.position()))
}

/// Mass-task success: at least one box centroid strictly outside the
/// circle.
pub fn success_mass(world: &WorldState, center: Vec2, radius: f64) -> bool {
    world
        .boxes
        .iter()
        .any(|b| b.pose.position().distance(center) > radius)
}

/// Wheel-effort energy proxy: coeff * (|w_l| + |w_r|) * dt. Zero only for
/// Stop.
pub fn robot_step_energy(action: Action, sim: &SimConfig, coeff: f64) -> f64 {
    let (l, r) = wheel_command(action, sim.v_max);
    coeff * (l.abs() + r.abs()) * sim.dt
}

/// Deterministic per-episode seed stream. For the mass task the seed's low
/// bit carries the heavy-box assignment and is locked to the run seed, so
/// one run is one configuration; the friction task lets it vary so both
/// push directions are trained.
pub fn episode_seed(kind: TaskKind, run_seed: u64, episode_index: u64, eval: bool) -> u64 {
    const EVAL_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
    let domain = if eval { EVAL_STREAM } else { 0 };
    let mixed = splitmix64(run_seed.wrapping_add(splitmix64(episode_index ^ domain)));
    match kind {
        TaskKind::VariableFriction => mixed,
        TaskKind::VariableMass => (mixed & !1) | (run_seed & 1),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Normalized world encoding: robot (x, y, cos yaw, sin yaw), each box the
/// same, then the goal descriptor. Positions are scaled per axis by the
/// scene bounds.
pub fn encode_observation(world: &WorldState, spec: &TaskSpec, goal: &Goal) -> Observation {
    let b = spec.scene.bounds;
    let c = b.center();
    let h = b.half_extents();
    let mut v = Vec::with_capacity(4 + 4 * world.boxes.len() + 4);
    let push_pose = |v: &mut Vec<f64>, pose: &Pose2D| {
        v.push((pose.x - c.x) / h.x);
        v.push((pose.y - c.y) / h.y);
        v.push(pose.yaw.cos());
        v.push(pose.yaw.sin());
    };
    push_pose(&mut v, &world.robot.pose);
    for bx in &world.boxes {
        push_pose(&mut v, &bx.pose);
    }
    match goal {
        Goal::Rect(r) => {
            let gc = r.center();
            let gh = r.half_extents();
            v.push((gc.x - c.x) / h.x);
            v.push((gc.y - c.y) / h.y);
            v.push(gh.x / h.x);
            v.push(gh.y / h.y);
        }
        Goal::Circle { center, radius } => {
            v.push((center.x - c.x) / h.x);
            v.push((center.y - c.y) / h.y);
            v.push(radius / h.x);
        }
    }
    debug_assert!(v.iter().all(|e| e.is_finite()));
    Observation(v)
}

/// Everything the reward and the logs need to know about one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Energy the cost signal priced this step (source-dependent).
    pub raw_work: f64,
    /// Friction work of the pushed boxes this step, always computed for
    /// metrics regardless of the cost source.
    pub physical_work: f64,
    /// c(t) in [0, 1]; pinned to 1 when the cost source is None.
    pub step_cost: f64,
    pub pushed: bool,
    pub collided: bool,
    pub success: bool,
    /// c(tau); present only on successful terminal steps of the mass task.
    pub episode_cost: Option<f64>,
    /// Total physical work of the episode; present on terminal steps.
    pub episode_work: Option<f64>,
    /// Centroid path length of the pushed box this step.
    pub pushed_translation: f64,
    /// Floor friction under the pushed box (sampled before the step).
    pub pushed_mu: Option<f64>,
    pub pushed_box: Option<BoxId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Serializable environment state for bit-exact checkpoint resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSnapshot {
    pub world: WorldState,
    pub goal: Goal,
    pub episode_steps: u32,
    pub done: bool,
    pub active: bool,
    pub frozen: bool,
    pub step_bounds: RunningBounds,
    pub episode_bounds: RunningBounds,
    pub episode_priced_works: Vec<f64>,
    pub episode_physical_work: f64,
}

/// One episodic pushing environment.
///
/// Running-bounds accumulators persist across `reset` calls for the life
/// of the instance; they are frozen (read-only, clamped) while
/// `freeze_bounds(true)` is set, which evaluation uses so it cannot
/// perturb training statistics. Instances are single-threaded.
#[derive(Debug, Clone)]
pub struct PushEnv {
    spec: TaskSpec,
    sim_cfg: SimConfig,
    fixed: FixedBounds,
    world: WorldState,
    goal: Goal,
    episode_steps: u32,
    done: bool,
    active: bool,
    frozen: bool,
    step_bounds: RunningBounds,
    episode_bounds: RunningBounds,
    episode_priced_works: Vec<f64>,
    episode_physical_work: f64,
}

impl PushEnv {
    pub fn new(spec: TaskSpec, sim_cfg: SimConfig) -> Result<Self, ConfigError> {
        spec.validate()?;
        let fixed = fixed_bounds(&spec, &sim_cfg);
        let (world, goal) = build_world(&spec, 0);
        Ok(Self {
            spec,
            sim_cfg,
            fixed,
            world,
            goal,
            episode_steps: 0,
            done: false,
            active: false,
            frozen: false,
            step_bounds: RunningBounds::new(),
            episode_bounds: RunningBounds::new(),
            episode_priced_works: Vec::new(),
            episode_physical_work: 0.0,
        })
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn sim_config(&self) -> &SimConfig {
        &self.sim_cfg
    }

    pub fn kind(&self) -> TaskKind {
        self.spec.kind()
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn step_bounds(&self) -> &RunningBounds {
        &self.step_bounds
    }

    pub fn episode_bounds(&self) -> &RunningBounds {
        &self.episode_bounds
    }

    pub fn observation_len(&self) -> usize {
        let n_boxes = match self.spec.layout {
            TaskLayout::Friction(_) => 1,
            TaskLayout::Mass(_) => 2,
        };
        let goal_len = match self.spec.layout {
            TaskLayout::Friction(_) => 4,
            TaskLayout::Mass(_) => 3,
        };
        4 + 4 * n_boxes + goal_len
    }

    pub fn action_count(&self) -> usize {
        Action::ALL.len()
    }

    /// Disable (or re-enable) running-bounds updates. Frozen bounds still
    /// normalize, with clamping.
    pub fn freeze_bounds(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    /// Adopt normalization bounds from elsewhere (a loaded checkpoint).
    pub fn restore_bounds(&mut self, step: RunningBounds, episode: RunningBounds) {
        self.step_bounds = step;
        self.episode_bounds = episode;
    }

    /// Start a new episode. Placement is a pure function of (spec, seed);
    /// running bounds persist.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let (world, goal) = build_world(&self.spec, seed);
        self.world = world;
        self.goal = goal;
        self.episode_steps = 0;
        self.done = false;
        self.active = true;
        self.episode_priced_works.clear();
        self.episode_physical_work = 0.0;
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        encode_observation(&self.world, &self.spec, &self.goal)
    }

    pub fn step(&mut self, action: Action) -> Result<Transition, EnvError> {
        if !self.active {
            return Err(EnvError::NotReset);
        }
        if self.done {
            return Err(EnvError::EpisodeDone);
        }

        let (next_world, outcome) = step_world(&self.world, action, &self.sim_cfg);

        // Price the motion. Friction is sampled under each box centroid
        // before the step; deltas are path lengths over the substeps.
        let mut physical_work = 0.0;
        let mut pushed_translation = 0.0;
        let mut pushed_mu = None;
        for (i, delta) in outcome.deltas.iter().enumerate() {
            if delta.is_zero() {
                continue;
            }
            let pre_box = &self.world.boxes[i];
            let mu = self.world.friction.friction_under(pre_box);
            let (x, y) = pre_box.contact_dims();
            let patch = ContactPatch::new(x, y, pre_box.mass, mu, STANDARD_GRAVITY)
                .expect("box dimensions validated at construction");
            physical_work += step_work(&patch, delta);
            if outcome.pushed_box == Some(pre_box.id) {
                pushed_translation = delta.translation;
                pushed_mu = Some(mu);
            }
        }
        let priced_work = match self.spec.reward.cost_source {
            CostSource::PushingEnergy => physical_work,
            CostSource::RobotEnergy => {
                robot_step_energy(action, &self.sim_cfg, self.spec.reward.robot_energy_coeff)
            }
            CostSource::None => 0.0,
        };
        let step_cost = self.normalized_step_cost(priced_work);
        self.episode_priced_works.push(priced_work);
        self.episode_physical_work += physical_work;

        let pushed = outcome.pushed_box.is_some();
        let collided = outcome.robot_collided;
        let success = match &self.goal {
            Goal::Rect(r) => success_friction(&next_world, r),
            Goal::Circle { center, radius } => success_mass(&next_world, *center, *radius),
        };
        self.episode_steps += 1;
        // Collision pays its penalty but does not end the episode; with a
        // negative living reward a terminal collision would make crashing
        // strictly better than finishing the task.
        let done = success || self.episode_steps >= self.spec.horizon;
        let preds = StepPredicates {
            success,
            collided,
            pushed,
        };

        let (reward, episode_cost) = match self.spec.layout {
            TaskLayout::Friction(_) => (
                reward_variable_friction(&preds, step_cost, &self.spec.reward),
                None,
            ),
            TaskLayout::Mass(_) => {
                let c_tau = success.then(|| self.episode_cost_on_success());
                (
                    reward_variable_mass(&preds, c_tau, &self.spec.reward)?,
                    c_tau,
                )
            }
        };

        self.world = next_world;
        self.done = done;

        Ok(Transition {
            observation: self.observe(),
            reward,
            done,
            info: StepInfo {
                raw_work: priced_work,
                physical_work,
                step_cost,
                pushed,
                collided,
                success,
                episode_cost,
                episode_work: done.then_some(self.episode_physical_work),
                pushed_translation,
                pushed_mu,
                pushed_box: outcome.pushed_box,
            },
        })
    }

    fn normalized_step_cost(&mut self, priced_work: f64) -> f64 {
        match self.spec.reward.cost_source {
            CostSource::None => 1.0,
            _ => match self.spec.reward.bound_mode {
                BoundMode::Fixed => {
                    let (lo, hi) = self.fixed.step;
                    normalize_fixed(priced_work, lo, hi)
                }
                BoundMode::Running => {
                    if self.frozen {
                        self.step_bounds
                            .normalize_frozen(priced_work)
                            .expect("work is non-negative")
                            .normalized_cost
                    } else {
                        self.step_bounds
                            .update_and_normalize(priced_work)
                            .expect("work is non-negative")
                            .normalized_cost
                    }
                }
            },
        }
    }

    fn episode_cost_on_success(&mut self) -> f64 {
        match self.spec.reward.cost_source {
            CostSource::None => 0.0,
            _ => {
                let e_tau = accumulate_episode(&self.episode_priced_works);
                match self.spec.reward.bound_mode {
                    BoundMode::Fixed => {
                        let (lo, hi) = self.fixed.episode;
                        normalize_fixed(e_tau, lo, hi)
                    }
                    BoundMode::Running => {
                        if self.frozen {
                            self.episode_bounds
                                .normalize_frozen(e_tau)
                                .expect("work is non-negative")
                                .normalized_cost
                        } else {
                            self.episode_bounds
                                .update_and_normalize(e_tau)
                                .expect("work is non-negative")
                                .normalized_cost
                        }
                    }
                }
            }
        }
    }

    pub fn snapshot(&self) -> EnvSnapshot {
        EnvSnapshot {
            world: self.world.clone(),
            goal: self.goal,
            episode_steps: self.episode_steps,
            done: self.done,
            active: self.active,
            frozen: self.frozen,
            step_bounds: self.step_bounds,
            episode_bounds: self.episode_bounds,
            episode_priced_works: self.episode_priced_works.clone(),
            episode_physical_work: self.episode_physical_work,
        }
    }

    pub fn restore(&mut self, snap: EnvSnapshot) {
        self.world = snap.world;
        self.goal = snap.goal;
        self.episode_steps = snap.episode_steps;
        self.done = snap.done;
        self.active = snap.active;
        self.frozen = snap.frozen;
        self.step_bounds = snap.step_bounds;
        self.episode_bounds = snap.episode_bounds;
        self.episode_priced_works = snap.episode_priced_works;
        self.episode_physical_work = snap.episode_physical_work;
    }
}

fn normalize_fixed(value: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= crate::cost::DEGENERATE_SPAN {
        0.0
    } else {
        ((value - lo) / span).clamp(0.0, 1.0)
    }
}

/// Deterministic placement for (spec, seed). Bit 0 of the seed flips the
/// layout (band mirror for the friction task, heavy-box side for the mass
/// task); the remaining bits drive the robot spawn jitter so that seeds
/// `2k` and `2k+1` differ exactly by the flip.
fn build_world(spec: &TaskSpec, seed: u64) -> (WorldState, Goal) {
    let flip = seed & 1 == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed >> 1);
    let mut jitter = |j: f64| if j > 0.0 { rng.gen_range(-j..j) } else { 0.0 };

    let spawn = &spec.scene.robot_spawn;
    let (boxes, goal, robot_pose) = match &spec.layout {
        TaskLayout::Friction(f) => {
            // Jitter is drawn in the canonical frame and the whole pose is
            // mirrored afterwards, so seeds 2k and 2k+1 are exact mirrors.
            let mirror = |v: Vec2| Vec2::new(v.x, 2.0 * f.band_boundary_y - v.y);
            let jittered = Pose2D::new(
                spawn.x + jitter(spawn.jitter_xy),
                spawn.y + jitter(spawn.jitter_xy),
                spawn.yaw + jitter(spawn.jitter_yaw),
            );
            let (box_pos, goal_center, robot_pose) = if flip {
                let p = mirror(Vec2::new(jittered.x, jittered.y));
                (
                    mirror(f.box_spawn),
                    mirror(f.goal_center),
                    Pose2D::new(p.x, p.y, -jittered.yaw),
                )
            } else {
                (f.box_spawn, f.goal_center, jittered)
            };
            let boxes = vec![BoxBody {
                id: BoxId(0),
                pose: Pose2D::new(box_pos.x, box_pos.y, 0.0),
                half_width: f.box_shape.half_width,
                half_length: f.box_shape.half_length,
                mass: f.box_mass,
                material_mu_override: None,
            }];
            let goal = Goal::Rect(Rect::from_center_half_extents(
                goal_center,
                f.goal_half_extents,
            ));
            (boxes, goal, robot_pose)
        }
        TaskLayout::Mass(m) => {
            // Box 0 on the left spawn, box 1 on the right; the flip bit
            // decides which one is heavy. Geometry is flip-independent.
            let (left_mass, right_mass) = if flip {
                (m.heavy_mass, m.light_mass)
            } else {
                (m.light_mass, m.heavy_mass)
            };
            let mk = |id: u32, x_offset: f64, mass: f64| BoxBody {
                id: BoxId(id),
                pose: Pose2D::new(m.circle_center.x + x_offset, m.circle_center.y, 0.0),
                half_width: m.box_shape.half_width,
                half_length: m.box_shape.half_length,
                mass,
                material_mu_override: None,
            };
            let boxes = vec![
                mk(0, -m.spawn_offset, left_mass),
                mk(1, m.spawn_offset, right_mass),
            ];
            let robot_pose = Pose2D::new(
                spawn.x + jitter(spawn.jitter_xy),
                spawn.y + jitter(spawn.jitter_xy),
                spawn.yaw + jitter(spawn.jitter_yaw),
            );
            let goal = Goal::Circle {
                center: m.circle_center,
                radius: m.circle_radius,
            };
            (boxes, goal, robot_pose)
        }
    };

    let world = WorldState {
        robot: RobotBody {
            pose: robot_pose,
            wheel_radius: spec.scene.robot.wheel_radius,
            axle_length: spec.scene.robot.axle_length,
            body_radius: spec.scene.robot.body_radius,
        },
        boxes,
        obstacles: spec.scene.obstacles(),
        friction: spec.friction_field(),
        time_step_index: 0,
    };
    (world, goal)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn friction_spec() -> TaskSpec {
        TaskSpec {
            scene: SceneSpec {
                bounds: Rect::new(Vec2::new(-3.0, -2.0), Vec2::new(3.0, 2.0)),
                wall_thickness: 0.1,
                extra_obstacles: vec![],
                robot: RobotGeometry {
                    wheel_radius: 0.06,
                    axle_length: 0.37,
                    body_radius: 0.28,
                },
                robot_spawn: SpawnZone {
                    x: -2.4,
                    y: 0.45,
                    yaw: 0.0,
                    jitter_xy: 0.12,
                    jitter_yaw: 0.3,
                },
            },
            layout: TaskLayout::Friction(FrictionLayout {
                band_boundary_y: 0.0,
                low_mu: 0.2,
                high_mu: 0.8,
                default_mu: 0.5,
                box_shape: BoxShape {
                    half_width: 0.2,
                    half_length: 0.2,
                },
                box_mass: 10.0,
                box_spawn: Vec2::new(-1.7, 0.45),
                goal_center: Vec2::new(1.8, -0.45),
                goal_half_extents: Vec2::new(0.4, 0.4),
            }),
            horizon: 500,
            reward: RewardConfig::default(),
        }
    }

    pub(crate) fn mass_spec() -> TaskSpec {
        TaskSpec {
            scene: SceneSpec {
                bounds: Rect::new(Vec2::new(-3.0, -2.0), Vec2::new(3.0, 2.0)),
                wall_thickness: 0.1,
                extra_obstacles: vec![],
                robot: RobotGeometry {
                    wheel_radius: 0.06,
                    axle_length: 0.37,
                    body_radius: 0.28,
                },
                robot_spawn: SpawnZone {
                    x: 0.0,
                    y: -0.7,
                    yaw: 1.5707963267948966,
                    jitter_xy: 0.1,
                    jitter_yaw: 3.141592653589793,
                },
            },
            layout: TaskLayout::Mass(MassLayout {
                floor_mu: 0.5,
                box_shape: BoxShape {
                    half_width: 0.2,
                    half_length: 0.2,
                },
                light_mass: 10.0,
                heavy_mass: 50.0,
                spawn_offset: 0.8,
                circle_center: Vec2::new(0.0, 0.0),
                circle_radius: 1.3,
            }),
            horizon: 300,
            reward: RewardConfig {
                success_reward: 100.0,
                time_penalty: 0.0,
                ..RewardConfig::default()
            },
        }
    }

    fn env(spec: TaskSpec) -> PushEnv {
        PushEnv::new(spec, SimConfig::default()).unwrap()
    }

    #[test]
    fn reset_is_deterministic() {
        let mut a = env(friction_spec());
        let mut b = env(friction_spec());
        for seed in [0u64, 1, 17, 1024] {
            assert_eq!(a.reset(seed), b.reset(seed));
        }
        let mut c = env(mass_spec());
        let mut d = env(mass_spec());
        assert_eq!(c.reset(42), d.reset(42));
    }

    #[test]
    fn friction_box_and_goal_on_opposite_bands() {
        let mut e = env(friction_spec());
        for seed in 0u64..8 {
            e.reset(seed);
            let box_y = e.world().boxes[0].pose.y;
            let Goal::Rect(goal) = *e.goal() else {
                panic!("friction goal must be a rectangle")
            };
            let goal_y = goal.center().y;
            assert!(
                box_y.signum() != goal_y.signum(),
                "seed {seed}: box y {box_y} and goal y {goal_y} share a band"
            );
            let field = &e.world().friction;
            let mu_box = field.friction_at(e.world().boxes[0].pose.position());
            let mu_goal = field.friction_at(goal.center());
            assert_ne!(mu_box, mu_goal);
        }
    }

    #[test]
    fn friction_flip_mirrors_layout() {
        let mut e = env(friction_spec());
        let obs_even = e.reset(6);
        let even_box_y = e.world().boxes[0].pose.y;
        let even_robot = e.world().robot.pose;
        let obs_odd = e.reset(7);
        let odd_box_y = e.world().boxes[0].pose.y;
        let odd_robot = e.world().robot.pose;
        assert!((even_box_y + odd_box_y).abs() < 1e-12);
        assert!((even_robot.y + odd_robot.y).abs() < 1e-12);
        assert!((even_robot.x - odd_robot.x).abs() < 1e-12);
        assert!((even_robot.yaw + odd_robot.yaw).abs() < 1e-12);
        assert_ne!(obs_even, obs_odd);
    }

    #[test]
    fn mass_flip_swaps_masses_only() {
        let mut e = env(mass_spec());
        e.reset(4);
        let even_boxes = e.world().boxes.clone();
        let even_robot = e.world().robot.pose;
        e.reset(5);
        let odd_boxes = e.world().boxes.clone();
        assert_eq!(e.world().robot.pose, even_robot);
        assert_eq!(even_boxes[0].pose, odd_boxes[0].pose);
        assert_eq!(even_boxes[1].pose, odd_boxes[1].pose);
        assert_eq!(even_boxes[0].mass, odd_boxes[1].mass);
        assert_eq!(even_boxes[1].mass, odd_boxes[0].mass);
        assert_ne!(even_boxes[0].mass, even_boxes[1].mass);
    }

    #[test]
    fn mass_episode_seeds_lock_assignment() {
        for run_seed in 0u64..4 {
            for ep in 0u64..50 {
                let s = episode_seed(TaskKind::VariableMass, run_seed, ep, false);
                assert_eq!(s & 1, run_seed & 1);
            }
        }
        // The friction stream varies its flip bit.
        let flips: Vec<u64> = (0..50)
            .map(|ep| episode_seed(TaskKind::VariableFriction, 0, ep, false) & 1)
            .collect();
        assert!(flips.contains(&0) && flips.contains(&1));
        // Eval streams differ from training streams.
        assert_ne!(
            episode_seed(TaskKind::VariableFriction, 0, 0, false),
            episode_seed(TaskKind::VariableFriction, 0, 0, true)
        );
    }

    #[test]
    fn friction_reward_table() {
        let cfg = RewardConfig::default();
        let success = StepPredicates {
            success: true,
            collided: true,
            pushed: true,
        };
        assert_eq!(reward_variable_friction(&success, 1.0, &cfg), 10.0);
        let collided = StepPredicates {
            collided: true,
            pushed: true,
            ..Default::default()
        };
        assert_eq!(reward_variable_friction(&collided, 1.0, &cfg), -10.0);
        let pushing = StepPredicates {
            pushed: true,
            ..Default::default()
        };
        assert_eq!(reward_variable_friction(&pushing, 0.4, &cfg), -0.2);
        assert_eq!(reward_variable_friction(&pushing, 0.0, &cfg), 0.0);
        assert_eq!(reward_variable_friction(&pushing, 1.0, &cfg), -0.5);
        let idle = StepPredicates::default();
        assert_eq!(reward_variable_friction(&idle, 0.0, &cfg), -1.0);
    }

    #[test]
    fn friction_reward_squared_variant() {
        let cfg = RewardConfig {
            squared_push_cost: true,
            ..RewardConfig::default()
        };
        let pushing = StepPredicates {
            pushed: true,
            ..Default::default()
        };
        assert_eq!(
            reward_variable_friction(&pushing, 0.4, &cfg),
            -0.5 * (0.4 * 0.4)
        );
    }

    #[test]
    fn mass_reward_table() {
        let cfg = RewardConfig {
            success_reward: 100.0,
            time_penalty: 0.0,
            ..RewardConfig::default()
        };
        let success = StepPredicates {
            success: true,
            collided: true,
            pushed: true,
        };
        assert_eq!(
            reward_variable_mass(&success, Some(0.0), &cfg).unwrap(),
            100.0
        );
        assert_eq!(reward_variable_mass(&success, Some(1.0), &cfg).unwrap(), 0.0);
        assert_eq!(
            reward_variable_mass(&success, Some(0.25), &cfg).unwrap(),
            75.0
        );
        assert_eq!(
            reward_variable_mass(&success, None, &cfg),
            Err(EnvError::MissingEpisodeCost)
        );
        let collided = StepPredicates {
            collided: true,
            pushed: true,
            ..Default::default()
        };
        assert_eq!(reward_variable_mass(&collided, None, &cfg).unwrap(), -10.0);
        let idle = StepPredicates::default();
        assert_eq!(reward_variable_mass(&idle, None, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn robot_energy_table() {
        let sim = SimConfig::default();
        assert_eq!(robot_step_energy(Action::Stop, &sim, 1.0), 0.0);
        assert!((robot_step_energy(Action::Forward, &sim, 1.0) - 1.2).abs() < 1e-12);
        assert!((robot_step_energy(Action::TurnLeft, &sim, 1.0) - 0.6).abs() < 1e-12);
        assert!((robot_step_energy(Action::TurnRight, &sim, 1.0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn fixed_bounds_match_worst_case() {
        let spec = friction_spec();
        let sim = SimConfig::default();
        let fb = fixed_bounds(&spec, &sim);
        assert_eq!(fb.step.0, 0.0);
        let translational = 0.8 * 10.0 * STANDARD_GRAVITY * 0.036;
        assert!((translational - 2.82528).abs() < 1e-10);
        assert!(fb.step.1 > translational);
        assert!(fb.step.1 < translational + 0.5);
        assert_eq!(fb.episode.1, fb.step.1 * 500.0);
    }

    #[test]
    fn observed_work_never_exceeds_fixed_bound() {
        let spec = friction_spec();
        let sim = SimConfig::default();
        let fb = fixed_bounds(&spec, &sim);
        let mut e = env(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut max_seen: f64 = 0.0;
        for ep in 0..4 {
            e.reset(episode_seed(TaskKind::VariableFriction, 9, ep, false));
            loop {
                let action = Action::ALL[rng.gen_range(0..4)];
                let t = e.step(action).unwrap();
                max_seen = max_seen.max(t.info.physical_work);
                if t.done {
                    break;
                }
            }
        }
        assert!(max_seen > 0.0, "rollout never pushed the box");
        assert!(max_seen <= fb.step.1, "work {max_seen} > bound {}", fb.step.1);
    }

    #[test]
    fn observation_center_and_bounds() {
        let mut e = env(mass_spec());
        e.reset(0);
        // Construct a centered robot directly.
        let mut snap = e.snapshot();
        snap.world.robot.pose = Pose2D::new(0.0, 0.0, 0.0);
        e.restore(snap);
        let obs = e.observe();
        assert_eq!(obs.len(), e.observation_len());
        assert_eq!(obs.as_slice()[0], 0.0);
        assert_eq!(obs.as_slice()[1], 0.0);
        assert_eq!(obs.as_slice()[2], 1.0);
        assert_eq!(obs.as_slice()[3], 0.0);
        // Circle descriptor: center plus radius entries.
        let n = obs.len();
        assert_eq!(obs.as_slice()[n - 3..], [0.0, 0.0, 1.3 / 3.0]);
    }

    #[test]
    fn observations_stay_in_unit_box_under_random_play() {
        let mut e = env(friction_spec());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for ep in 0..3 {
            let mut obs = e.reset(episode_seed(TaskKind::VariableFriction, 1, ep, false));
            loop {
                assert!(
                    obs.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)),
                    "out-of-range observation {obs:?}"
                );
                let t = e.step(Action::ALL[rng.gen_range(0..4)]).unwrap();
                obs = t.observation;
                if t.done {
                    break;
                }
            }
        }
    }

    #[test]
    fn mirrored_worlds_mirror_observations() {
        let mut e = env(friction_spec());
        let obs_even = e.reset(10);
        let obs_odd = e.reset(11);
        let a = obs_even.as_slice();
        let b = obs_odd.as_slice();
        // Pose chunks: x and cos match; y and sin negate. The goal chunk's
        // half extents are mirror-invariant.
        let poses = a.len() - 4;
        for i in 0..poses {
            match i % 4 {
                0 | 2 => assert!((a[i] - b[i]).abs() < 1e-12, "entry {i}"),
                _ => assert!((a[i] + b[i]).abs() < 1e-12, "entry {i}"),
            }
        }
        assert!((a[poses] - b[poses]).abs() < 1e-12);
        assert!((a[poses + 1] + b[poses + 1]).abs() < 1e-12);
        assert!((a[poses + 2] - b[poses + 2]).abs() < 1e-12);
        assert!((a[poses + 3] - b[poses + 3]).abs() < 1e-12);
    }

    #[test]
    fn idle_step_rewards() {
        let mut e = env(friction_spec());
        e.reset(0);
        let t = e.step(Action::Stop).unwrap();
        assert_eq!(t.reward, -1.0);
        assert!(!t.done);

        let mut e = env(mass_spec());
        e.reset(0);
        let t = e.step(Action::Stop).unwrap();
        assert_eq!(t.reward, 0.0);
        assert!(!t.done);
    }

    #[test]
    fn step_errors() {
        let mut e = env(friction_spec());
        assert_eq!(e.step(Action::Stop), Err(EnvError::NotReset));
        e.reset(0);
        for _ in 0..e.spec().horizon {
            if e.step(Action::Stop).unwrap().done {
                break;
            }
        }
        assert!(e.is_done());
        assert_eq!(e.step(Action::Stop), Err(EnvError::EpisodeDone));
    }

    #[test]
    fn horizon_expiry_fails_episode() {
        let mut e = env(mass_spec());
        e.reset(0);
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let t = e.step(Action::Stop).unwrap();
            total += t.reward;
            steps += 1;
            if t.done {
                assert!(!t.info.success);
                assert_eq!(t.info.episode_work, Some(0.0));
                break;
            }
        }
        assert_eq!(steps, 300);
        // Collision-free failure of the mass task returns exactly 0.
        assert_eq!(total, 0.0);
    }

    #[test]
    fn collision_penalized_each_step_without_terminating() {
        let mut spec = friction_spec();
        // Aim the spawn at the nearest wall, no jitter.
        spec.scene.robot_spawn = SpawnZone {
            x: -2.4,
            y: 0.45,
            yaw: std::f64::consts::PI,
            jitter_xy: 0.0,
            jitter_yaw: 0.0,
        };
        let mut e = env(spec);
        e.reset(0);
        let mut collision_steps = 0;
        for _ in 0..30 {
            let t = e.step(Action::Forward).unwrap();
            if t.info.collided {
                assert_eq!(t.reward, -10.0);
                assert!(!t.done, "collision must not end the episode");
                collision_steps += 1;
            }
        }
        // The robot reaches the wall and keeps grinding against it.
        assert!(collision_steps > 5, "saw {collision_steps} collision steps");
        // Driving away stops the penalty.
        let mut recovered = false;
        for _ in 0..30 {
            let t = e.step(Action::TurnLeft).unwrap();
            if !t.info.collided {
                recovered = true;
                assert_eq!(t.reward, -1.0);
                break;
            }
        }
        assert!(recovered);
    }

    #[test]
    fn success_pays_full_reward() {
        let mut e = env(friction_spec());
        e.reset(0);
        // Teleport the box into the goal; the next step must succeed.
        let mut snap = e.snapshot();
        let Goal::Rect(goal) = snap.goal else { panic!() };
        let c = goal.center();
        snap.world.boxes[0].pose = Pose2D::new(c.x, c.y, 0.0);
        e.restore(snap);
        let t = e.step(Action::Stop).unwrap();
        assert!(t.done && t.info.success);
        assert_eq!(t.reward, 10.0);
        assert_eq!(t.info.episode_cost, None);
    }

    #[test]
    fn mass_success_prices_episode_cost() {
        let mut e = env(mass_spec());
        e.reset(0);
        let mut snap = e.snapshot();
        snap.world.boxes[0].pose = Pose2D::new(-1.5, 0.0, 0.0);
        e.restore(snap);
        let t = e.step(Action::Stop).unwrap();
        assert!(t.done && t.info.success);
        // First success ever: degenerate episode bounds price it at 0.
        assert_eq!(t.info.episode_cost, Some(0.0));
        assert_eq!(t.reward, 100.0);
    }

    #[test]
    fn nocost_variant_pins_costs() {
        let mut spec = friction_spec();
        spec.reward.cost_source = CostSource::None;
        let mut e = env(spec);
        e.reset(0);
        // Drive toward the box; every pushing step must pay exactly
        // push_coeff * 1.
        let mut saw_push = false;
        for _ in 0..200 {
            let t = e.step(Action::Forward).unwrap();
            if t.info.pushed {
                saw_push = true;
                assert_eq!(t.info.step_cost, 1.0);
                assert_eq!(t.reward, -0.5);
            }
            if t.done {
                break;
            }
        }
        assert!(saw_push);

        let mut spec = mass_spec();
        spec.reward.cost_source = CostSource::None;
        let mut e = env(spec);
        e.reset(0);
        let mut snap = e.snapshot();
        snap.world.boxes[1].pose = Pose2D::new(1.5, 0.0, 0.0);
        e.restore(snap);
        let t = e.step(Action::Stop).unwrap();
        assert_eq!(t.reward, 100.0);
        assert_eq!(t.info.episode_cost, Some(0.0));
    }

    #[test]
    fn bounds_persist_across_resets_and_freeze() {
        let mut e = env(friction_spec());
        e.reset(0);
        for _ in 0..40 {
            if e.step(Action::Forward).unwrap().done {
                break;
            }
        }
        let count_before = e.step_bounds().count();
        assert!(count_before > 0);
        e.reset(2);
        assert_eq!(e.step_bounds().count(), count_before);
        e.freeze_bounds(true);
        e.step(Action::Forward).unwrap();
        assert_eq!(e.step_bounds().count(), count_before);
        e.freeze_bounds(false);
        e.step(Action::Forward).unwrap();
        assert_eq!(e.step_bounds().count(), count_before + 1);
    }

    #[test]
    fn bound_mode_never_changes_reward_case() {
        let run = |mode: BoundMode| {
            let mut spec = friction_spec();
            spec.reward.bound_mode = mode;
            let mut e = env(spec);
            e.reset(8);
            let mut cases = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..300 {
                let t = e.step(Action::ALL[rng.gen_range(0..4)]).unwrap();
                cases.push((t.info.success, t.info.collided, t.info.pushed));
                if t.done {
                    break;
                }
            }
            cases
        };
        assert_eq!(run(BoundMode::Running), run(BoundMode::Fixed));
    }

    #[test]
    fn friction_step_rewards_bounded() {
        let mut e = env(friction_spec());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for ep in 0..3 {
            e.reset(episode_seed(TaskKind::VariableFriction, 3, ep, false));
            loop {
                let t = e.step(Action::ALL[rng.gen_range(0..4)]).unwrap();
                assert!((-10.0..=10.0).contains(&t.reward));
                if t.info.pushed && !t.info.success && !t.info.collided {
                    assert!((-0.5..=0.0).contains(&t.reward));
                }
                if t.done {
                    break;
                }
            }
        }
    }

    #[test]
    fn snapshot_roundtrip_preserves_behavior() {
        let mut a = env(friction_spec());
        a.reset(1);
        for _ in 0..25 {
            a.step(Action::Forward).unwrap();
        }
        let snap = a.snapshot();
        let mut b = env(friction_spec());
        b.restore(snap.clone());
        assert_eq!(a.step(Action::TurnLeft).unwrap(), b.step(Action::TurnLeft).unwrap());
        let json = serde_json::to_string(&snap).unwrap();
        let back: EnvSnapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let mut spec = friction_spec();
        spec.horizon = 0;
        let err = PushEnv::new(spec, SimConfig::default()).unwrap_err();
        assert!(err.to_string().contains("horizon"));

        let mut spec = friction_spec();
        if let TaskLayout::Friction(f) = &mut spec.layout {
            f.goal_center.y = 0.45; // same band as the box
        }
        let err = PushEnv::new(spec, SimConfig::default()).unwrap_err();
        assert!(err.to_string().contains("goal_center"));

        let mut spec = mass_spec();
        if let TaskLayout::Mass(m) = &mut spec.layout {
            m.spawn_offset = 2.0; // outside the circle
        }
        let err = PushEnv::new(spec, SimConfig::default()).unwrap_err();
        assert!(err.to_string().contains("spawn_offset"));
    }
}
