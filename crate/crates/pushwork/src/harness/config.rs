//! Run configuration: one TOML document covering the task, the simulator,
//! PPO, and the run settings. Every task and reward constant lives here.

use super::Variant;
use crate::envs::{
    BoundMode, BoxShape, CostSource, FrictionLayout, MassLayout, RewardConfig, RobotGeometry,
    SceneSpec, SpawnZone, TaskLayout, TaskSpec,
};
use crate::geom::{Rect, Vec2};
use crate::ppo::PpoConfig;
use crate::sim::SimConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_log_every() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub variant: Variant,
    pub seeds: Vec<u64>,
    #[serde(default = "default_log_every")]
    pub log_every_updates: u32,
    #[serde(default)]
    pub checkpoint_every_updates: Option<u32>,
    /// Evaluation episodes per seed for reports.
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: u32,
}

fn default_eval_episodes() -> u32 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullConfig {
    pub task: TaskSpec,
    pub sim: SimConfig,
    pub ppo: PpoConfig,
    pub run: RunSettings,
}

impl FullConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: FullConfig =
            toml::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.task.validate().map_err(|e| e.to_string())?;
        self.ppo.validate()?;
        if self.run.seeds.is_empty() {
            return Err("run.seeds must not be empty".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// The two-band floor task at desk scale: a walled room split into a
/// slippery and a grippy half, one 10 kg box, goal rectangle on the
/// opposite band.
pub fn default_friction_config() -> FullConfig {
    FullConfig {
        task: TaskSpec {
            scene: SceneSpec {
                bounds: Rect::new(Vec2::new(-2.4, -1.6), Vec2::new(2.4, 1.6)),
                wall_thickness: 0.1,
                extra_obstacles: vec![],
                robot: RobotGeometry {
                    wheel_radius: 0.06,
                    axle_length: 0.37,
                    body_radius: 0.28,
                },
                robot_spawn: SpawnZone {
                    x: -1.9,
                    y: 0.5,
                    yaw: 0.0,
                    jitter_xy: 0.1,
                    jitter_yaw: 0.25,
                },
            },
            layout: TaskLayout::Friction(FrictionLayout {
                band_boundary_y: 0.0,
                low_mu: 0.2,
                high_mu: 0.8,
                default_mu: 0.5,
                box_shape: BoxShape {
                    half_width: 0.25,
                    half_length: 0.25,
                },
                box_mass: 10.0,
                box_spawn: Vec2::new(-1.2, 0.5),
                goal_center: Vec2::new(1.2, -0.55),
                goal_half_extents: Vec2::new(0.7, 0.5),
            }),
            horizon: 500,
            reward: RewardConfig {
                success_reward: 10.0,
                collision_penalty: -10.0,
                time_penalty: -1.0,
                push_coeff: -0.5,
                cost_source: CostSource::PushingEnergy,
                bound_mode: BoundMode::Running,
                squared_push_cost: false,
                robot_energy_coeff: 1.0,
            },
        },
        sim: SimConfig::default(),
        ppo: PpoConfig {
            total_env_steps: 300_000,
            ..PpoConfig::default()
        },
        run: RunSettings {
            variant: Variant::Ours,
            seeds: vec![0, 1, 2],
            log_every_updates: 1,
            checkpoint_every_updates: None,
            eval_episodes: 30,
        },
    }
}

/// The two-box task: equidistant 10 kg / 50 kg boxes inside a circle,
/// push either one out.
pub fn default_mass_config() -> FullConfig {
    FullConfig {
        task: TaskSpec {
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
                    y: -0.55,
                    yaw: 1.5707963267948966,
                    jitter_xy: 0.08,
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
                spawn_offset: 0.9,
                circle_center: Vec2::new(0.0, 0.0),
                circle_radius: 1.2,
            }),
            horizon: 300,
            reward: RewardConfig {
                success_reward: 100.0,
                collision_penalty: -10.0,
                time_penalty: 0.0,
                push_coeff: -0.5,
                cost_source: CostSource::PushingEnergy,
                bound_mode: BoundMode::Running,
                squared_push_cost: false,
                robot_energy_coeff: 1.0,
            },
        },
        sim: SimConfig::default(),
        ppo: PpoConfig {
            total_env_steps: 200_000,
            ..PpoConfig::default()
        },
        run: RunSettings {
            variant: Variant::Ours,
            seeds: (0..10).collect(),
            log_every_updates: 1,
            checkpoint_every_updates: None,
            eval_episodes: 5,
        },
    }
}
