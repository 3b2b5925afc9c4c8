//! Task descriptions: scene geometry, goal regions, and the per-task
//! layout parameters that `reset` turns into a concrete world.

use crate::cost::{rotation_shape_integral, STANDARD_GRAVITY};
use crate::geom::{Rect, Vec2};
use crate::sim::{FrictionBand, FrictionField, Pose2D, SimConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("invalid task spec: {field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    VariableFriction,
    VariableMass,
}

/// Goal region: a rectangle the box must reach, or a circle a box must
/// leave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Rect(Rect),
    Circle { center: Vec2, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotGeometry {
    pub wheel_radius: f64,
    pub axle_length: f64,
    pub body_radius: f64,
}

/// Robot start pose with uniform jitter applied at reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnZone {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub jitter_xy: f64,
    pub jitter_yaw: f64,
}

impl SpawnZone {
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x, self.y, self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxShape {
    pub half_width: f64,
    pub half_length: f64,
}

impl BoxShape {
    pub fn half_diagonal(&self) -> f64 {
        self.half_width.hypot(self.half_length)
    }
}

/// Scene shared by both tasks: the floor bounding box (also the
/// observation normalization frame), perimeter walls, and the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub bounds: Rect,
    pub wall_thickness: f64,
    #[serde(default)]
    pub extra_obstacles: Vec<Rect>,
    pub robot: RobotGeometry,
    pub robot_spawn: SpawnZone,
}

impl SceneSpec {
    /// Four perimeter walls hugging the outside of `bounds`, plus any
    /// extra obstacles.
    pub fn obstacles(&self) -> Vec<Rect> {
        let t = self.wall_thickness;
        let b = self.bounds;
        let mut walls = vec![
            Rect::new(Vec2::new(b.min.x - t, b.min.y - t), Vec2::new(b.min.x, b.max.y + t)),
            Rect::new(Vec2::new(b.max.x, b.min.y - t), Vec2::new(b.max.x + t, b.max.y + t)),
            Rect::new(Vec2::new(b.min.x - t, b.min.y - t), Vec2::new(b.max.x + t, b.min.y)),
            Rect::new(Vec2::new(b.min.x - t, b.max.y), Vec2::new(b.max.x + t, b.max.y + t)),
        ];
        walls.extend(self.extra_obstacles.iter().copied());
        walls
    }
}

/// Two-band floor task: push the box from its band into a goal rectangle
/// on the other band. Odd reset seeds mirror the layout across the band
/// boundary, so both directions are trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionLayout {
    /// Horizontal line splitting the floor; the low band lies below it.
    pub band_boundary_y: f64,
    pub low_mu: f64,
    pub high_mu: f64,
    pub default_mu: f64,
    pub box_shape: BoxShape,
    pub box_mass: f64,
    /// Canonical box spawn (mirrored across the boundary on odd seeds).
    pub box_spawn: Vec2,
    /// Canonical goal center; must sit on the other band from the box.
    pub goal_center: Vec2,
    pub goal_half_extents: Vec2,
}

/// Two-box task: push at least one box out of the circle. The reset seed's
/// low bit decides which spawn gets the heavy box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassLayout {
    pub floor_mu: f64,
    pub box_shape: BoxShape,
    pub light_mass: f64,
    pub heavy_mass: f64,
    /// Boxes spawn at `circle_center +- (spawn_offset, 0)`.
    pub spawn_offset: f64,
    pub circle_center: Vec2,
    pub circle_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskLayout {
    Friction(FrictionLayout),
    Mass(MassLayout),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub scene: SceneSpec,
    pub layout: TaskLayout,
    pub horizon: u32,
    pub reward: super::RewardConfig,
}

impl TaskSpec {
    pub fn kind(&self) -> TaskKind {
        match self.layout {
            TaskLayout::Friction(_) => TaskKind::VariableFriction,
            TaskLayout::Mass(_) => TaskKind::VariableMass,
        }
    }

    /// The friction field the task plays on.
    pub fn friction_field(&self) -> FrictionField {
        match &self.layout {
            TaskLayout::Friction(f) => {
                let t = self.scene.wall_thickness;
                let b = self.scene.bounds;
                let lo = Vec2::new(b.min.x - t, b.min.y - t);
                let hi = Vec2::new(b.max.x + t, b.max.y + t);
                FrictionField {
                    // Low band listed first: boundary points resolve low.
                    bands: vec![
                        FrictionBand {
                            area: Rect::new(lo, Vec2::new(hi.x, f.band_boundary_y)),
                            mu: f.low_mu,
                        },
                        FrictionBand {
                            area: Rect::new(Vec2::new(lo.x, f.band_boundary_y), hi),
                            mu: f.high_mu,
                        },
                    ],
                    default_mu: f.default_mu,
                }
            }
            TaskLayout::Mass(m) => FrictionField::uniform(m.floor_mu),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scene;
        if !s.bounds.is_valid() {
            return Err(ConfigError::new("scene.bounds", "min must be below max"));
        }
        if s.wall_thickness <= 0.0 {
            return Err(ConfigError::new("scene.wall_thickness", "must be positive"));
        }
        for (name, v) in [
            ("scene.robot.wheel_radius", s.robot.wheel_radius),
            ("scene.robot.axle_length", s.robot.axle_length),
            ("scene.robot.body_radius", s.robot.body_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(name, "must be positive"));
            }
        }
        let spawn_reach = s.robot_spawn.jitter_xy + s.robot.body_radius;
        let spawn = Vec2::new(s.robot_spawn.x, s.robot_spawn.y);
        if !inside_with_margin(&s.bounds, spawn, spawn_reach) {
            return Err(ConfigError::new(
                "scene.robot_spawn",
                "spawn zone (plus body radius) must lie inside the scene bounds",
            ));
        }
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        if let super::BoundMode::Fixed = self.reward.bound_mode {
            // Fixed bounds are derived from the spec itself; nothing extra
            // to provide, but the cost source must define an energy.
            if matches!(self.reward.cost_source, super::CostSource::None) {
                return Err(ConfigError::new(
                    "reward.bound_mode",
                    "fixed bounds require a cost source",
                ));
            }
        }

        match &self.layout {
            TaskLayout::Friction(f) => {
                if !(f.low_mu >= 0.0 && f.high_mu >= 0.0 && f.default_mu >= 0.0) {
                    return Err(ConfigError::new("layout.friction", "mu must be non-negative"));
                }
                if f.low_mu >= f.high_mu {
                    return Err(ConfigError::new(
                        "layout.friction.low_mu",
                        "low band must have smaller mu than the high band",
                    ));
                }
                if f.box_mass <= 0.0 {
                    return Err(ConfigError::new("layout.friction.box_mass", "must be positive"));
                }
                if f.box_shape.half_width <= 0.0 || f.box_shape.half_length <= 0.0 {
                    return Err(ConfigError::new("layout.friction.box_shape", "must be positive"));
                }
                let box_side = (f.box_spawn.y - f.band_boundary_y).signum();
                let goal_side = (f.goal_center.y - f.band_boundary_y).signum();
                if box_side == 0.0 || goal_side == 0.0 || box_side == goal_side {
                    return Err(ConfigError::new(
                        "layout.friction.goal_center",
                        "box spawn and goal must lie on opposite bands",
                    ));
                }
                let margin = f.box_shape.half_diagonal();
                if !inside_with_margin(&s.bounds, f.box_spawn, margin) {
                    return Err(ConfigError::new("layout.friction.box_spawn", "outside scene bounds"));
                }
                let goal = Rect::from_center_half_extents(f.goal_center, f.goal_half_extents);
                if !(s.bounds.contains(goal.min) && s.bounds.contains(goal.max)) {
                    return Err(ConfigError::new("layout.friction.goal_center", "goal leaves scene bounds"));
                }
            }
            TaskLayout::Mass(m) => {
                if m.floor_mu < 0.0 {
                    return Err(ConfigError::new("layout.mass.floor_mu", "must be non-negative"));
                }
                if !(m.light_mass > 0.0 && m.heavy_mass > 0.0) {
                    return Err(ConfigError::new("layout.mass.masses", "must be positive"));
                }
                if m.light_mass >= m.heavy_mass {
                    return Err(ConfigError::new(
                        "layout.mass.light_mass",
                        "light box must be lighter than the heavy box",
                    ));
                }
                if m.box_shape.half_width <= 0.0 || m.box_shape.half_length <= 0.0 {
                    return Err(ConfigError::new("layout.mass.box_shape", "must be positive"));
                }
                if !(m.spawn_offset > 0.0 && m.spawn_offset < m.circle_radius) {
                    return Err(ConfigError::new(
                        "layout.mass.spawn_offset",
                        "boxes must start strictly inside the circle",
                    ));
                }
                // A box centroid must be able to get past the circle rim
                // before hitting a wall.
                let margin = m.circle_radius + 2.0 * m.box_shape.half_diagonal();
                if !inside_with_margin(&s.bounds, m.circle_center, margin) {
                    return Err(ConfigError::new(
                        "layout.mass.circle_radius",
                        "circle too close to the walls for boxes to exit",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn inside_with_margin(bounds: &Rect, p: Vec2, margin: f64) -> bool {
    p.x - margin >= bounds.min.x
        && p.x + margin <= bounds.max.x
        && p.y - margin >= bounds.min.y
        && p.y + margin <= bounds.max.y
}

/// Fixed normalization bounds "estimated from prior knowledge": zero to
/// the worst-case single-step work, and that times the horizon for
/// episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedBounds {
    pub step: (f64, f64),
    pub episode: (f64, f64),
}

/// Worst-case step work for a box: maximum friction, full-speed robot
/// travel as the displacement bound, and the rotation-gain-implied yaw
/// bound.
pub fn fixed_bounds(spec: &TaskSpec, sim: &SimConfig) -> FixedBounds {
    let dx_max = sim.v_max * spec.scene.robot.wheel_radius * sim.dt;
    let step_max = match &spec.reward.cost_source {
        super::CostSource::RobotEnergy => spec.reward.robot_energy_coeff * 2.0 * sim.v_max * sim.dt,
        _ => {
            let field = spec.friction_field();
            let mu_field_max = field
                .bands
                .iter()
                .map(|b| b.mu)
                .fold(field.default_mu, f64::max);
            let boxes: Vec<(BoxShape, f64, Option<f64>)> = match &spec.layout {
                TaskLayout::Friction(f) => vec![(f.box_shape, f.box_mass, None)],
                TaskLayout::Mass(m) => vec![
                    (m.box_shape, m.light_mass, None),
                    (m.box_shape, m.heavy_mass, None),
                ],
            };
            boxes
                .iter()
                .map(|(shape, mass, mu_override)| {
                    let mu = mu_override.unwrap_or(mu_field_max);
                    let (x, y) = (2.0 * shape.half_width, 2.0 * shape.half_length);
                    let theta_max = sim.rotation_gain * shape.half_diagonal() * dx_max;
                    let normal = mass * STANDARD_GRAVITY;
                    let shape_integral = rotation_shape_integral(x, y)
                        .expect("validated box dimensions");
                    mu * normal * dx_max + mu * normal / (x * y) * theta_max * shape_integral
                })
                .fold(0.0, f64::max)
        }
    };
    FixedBounds {
        step: (0.0, step_max),
        episode: (0.0, step_max * spec.horizon as f64),
    }
}
