//! Deterministic planar world stepping.
//!
//! A differential-drive robot (disc footprint) moves on a floor whose
//! friction varies by axis-aligned band. Boxes are pushed quasi-statically:
//! they move only while the robot disc presses into them, by exactly the
//! amount needed to resolve the penetration, plus a rotation proportional
//! to the tangential lever arm of the contact point. Obstacles clip both
//! robot and box motion. Stepping is a pure function of its inputs:
//! identical `(world, action, config)` yields bit-identical outputs.

use crate::cost::MotionDelta;
use crate::geom::{
    disc_obb_contact, disc_rect_overlap, normalize_angle, obb_obb_overlap, obb_rect_overlap, Obb,
    Rect, Vec2,
};
use serde::{Deserialize, Serialize};

/// The four discrete wheel commands.
///
/// Encodings are stable: Forward=0, TurnLeft=1, TurnRight=2, Stop=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub const ALL: [Action; 4] = [
        Action::Forward,
        Action::TurnLeft,
        Action::TurnRight,
        Action::Stop,
    ];

    pub fn index(self) -> usize {
        match self {
            Action::Forward => 0,
            Action::TurnLeft => 1,
            Action::TurnRight => 2,
            Action::Stop => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }
}

/// Planar pose. Yaw is kept normalized to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Two-wheeled robot with a circular footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotBody {
    pub pose: Pose2D,
    pub wheel_radius: f64,
    pub axle_length: f64,
    pub body_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoxId(pub u32);

/// Pushable box. `material_mu_override`, when set, replaces the floor
/// friction sampled under the box centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBody {
    pub id: BoxId,
    pub pose: Pose2D,
    pub half_width: f64,
    pub half_length: f64,
    pub mass: f64,
    pub material_mu_override: Option<f64>,
}

impl BoxBody {
    pub fn obb(&self) -> Obb {
        Obb::new(
            self.pose.position(),
            self.pose.yaw,
            Vec2::new(self.half_width, self.half_length),
        )
    }

    /// Full contact-rectangle side lengths (X, Y).
    pub fn contact_dims(&self) -> (f64, f64) {
        (2.0 * self.half_width, 2.0 * self.half_length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionBand {
    pub area: Rect,
    pub mu: f64,
}

/// Piecewise-constant friction map: the first band containing a point
/// wins, with `default_mu` covering everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionField {
    pub bands: Vec<FrictionBand>,
    pub default_mu: f64,
}

impl FrictionField {
    pub fn uniform(mu: f64) -> Self {
        Self {
            bands: Vec::new(),
            default_mu: mu,
        }
    }

    pub fn friction_at(&self, point: Vec2) -> f64 {
        self.bands
            .iter()
            .find(|b| b.area.contains(point))
            .map(|b| b.mu)
            .unwrap_or(self.default_mu)
    }

    /// Effective friction under a box: its material override if present,
    /// otherwise the band under its centroid.
    pub fn friction_under(&self, box_body: &BoxBody) -> f64 {
        box_body
            .material_mu_override
            .unwrap_or_else(|| self.friction_at(box_body.pose.position()))
    }
}

/// Complete simulator state. Value semantics: stepping clones and returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robot: RobotBody,
    pub boxes: Vec<BoxBody>,
    pub obstacles: Vec<Rect>,
    pub friction: FrictionField,
    pub time_step_index: u64,
}

/// What one step did: per-box motion, who was pushed, collision events,
/// robot travel.
///
/// `robot_collided` / `box_collided` record motion-clipping events against
/// obstacles during the step (ramming a wall, pushing a box into a wall),
/// not merely resting contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub deltas: Vec<MotionDelta>,
    pub pushed_box: Option<BoxId>,
    pub robot_collided: bool,
    pub box_collided: bool,
    pub robot_path_length: f64,
}

impl StepOutcome {
    fn new(n_boxes: usize) -> Self {
        Self {
            deltas: vec![MotionDelta::default(); n_boxes],
            pushed_box: None,
            robot_collided: false,
            box_collided: false,
            robot_path_length: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Step duration in seconds.
    pub dt: f64,
    /// Maximum wheel angular velocity (rad/s).
    pub v_max: f64,
    /// Kinematic substeps per step.
    pub substeps: u32,
    /// Allowed resting overlap (meters).
    pub contact_tolerance: f64,
    /// Box rotation per meter of lever arm per meter of push depth
    /// (rad / m^2).
    pub rotation_gain: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            v_max: 6.0,
            substeps: 5,
            contact_tolerance: 1e-4,
            rotation_gain: 1.0,
        }
    }
}

/// Wheel speeds for an action.
///
/// The mapping is taken verbatim from the action table: TurnLeft drives
/// the wheels at `(0.5 v, -0.5 v)`. Under the kinematics used here
/// (counterclockwise-positive yaw, right wheel minus left over the axle)
/// that command yields a negative yaw rate; the label names the command,
/// the kinematics decide the direction.
pub fn wheel_command(action: Action, v_max: f64) -> (f64, f64) {
    match action {
        Action::Forward => (v_max, v_max),
        Action::TurnLeft => (0.5 * v_max, -0.5 * v_max),
        Action::TurnRight => (-0.5 * v_max, 0.5 * v_max),
        Action::Stop => (0.0, 0.0),
    }
}

/// Exact unicycle update over `dt`: linear speed from the wheel mean,
/// yaw rate from the wheel difference, integrated along the circular arc.
pub fn integrate_robot(
    pose: Pose2D,
    omega_left: f64,
    omega_right: f64,
    wheel_radius: f64,
    axle_length: f64,
    dt: f64,
) -> Pose2D {
    let u = wheel_radius * (omega_left + omega_right) / 2.0;
    let w = wheel_radius * (omega_right - omega_left) / axle_length;
    if w.abs() < 1e-9 {
        Pose2D {
            x: pose.x + u * pose.yaw.cos() * dt,
            y: pose.y + u * pose.yaw.sin() * dt,
            yaw: pose.yaw,
        }
    } else {
        let radius = u / w;
        let yaw1 = pose.yaw + w * dt;
        Pose2D {
            x: pose.x + radius * (yaw1.sin() - pose.yaw.sin()),
            y: pose.y - radius * (yaw1.cos() - pose.yaw.cos()),
            yaw: normalize_angle(yaw1),
        }
    }
}

const BISECT_ITERS: usize = 40;
const MAX_RESOLVE_ITERS: usize = 8;

/// Result of resolving the robot disc against one box.
#[derive(Debug, Clone)]
pub struct PushResolution {
    pub box_after: BoxBody,
    pub delta: MotionDelta,
    pub pushed: bool,
    /// Box motion was clipped against an obstacle this resolution.
    pub blocked_by_obstacle: bool,
    /// Disc overlap remaining after resolution (box jammed or push budget
    /// exhausted).
    pub residual_penetration: f64,
}

fn box_overlaps_anything(obb: &Obb, obstacles: &[Rect], others: &[Obb]) -> bool {
    obstacles.iter().any(|r| obb_rect_overlap(obb, r) > 0.0)
        || others.iter().any(|o| obb_obb_overlap(obb, o) > 0.0)
}

/// Longest prefix of a translation `dir * dist` the box can take without
/// overlapping anything. Returns the applied distance and whether an
/// obstacle cut it short.
fn clip_box_translation(
    obb: &Obb,
    dir: Vec2,
    dist: f64,
    obstacles: &[Rect],
    others: &[Obb],
) -> (f64, bool) {
    let moved = |t: f64| Obb::new(obb.center + dir * t, obb.yaw, obb.half_extents);
    if !box_overlaps_anything(&moved(dist), obstacles, others) {
        return (dist, false);
    }
    let mut lo = 0.0;
    let mut hi = dist;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if box_overlaps_anything(&moved(mid), obstacles, others) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, true)
}

/// Rotate the box by up to `theta`, halving the angle until the rotated
/// box is free of obstacles. Returns the applied (signed) angle.
fn apply_box_rotation(bx: &mut BoxBody, theta: f64, obstacles: &[Rect], others: &[Obb]) -> f64 {
    let base = bx.obb();
    let mut t = theta;
    for _ in 0..8 {
        let rotated = Obb::new(base.center, normalize_angle(base.yaw + t), base.half_extents);
        if !box_overlaps_anything(&rotated, obstacles, others) {
            bx.pose.yaw = rotated.yaw;
            return t;
        }
        t *= 0.5;
    }
    0.0
}

/// Quasi-static push resolution: with the robot disc at `disc_center`,
/// translate the box along the contact normal until the penetration is
/// resolved (clipping at obstacles), rotating it about its centroid in
/// proportion to the tangential lever arm of the contact point. Total
/// translation is capped at `max_push`, the robot's travel budget.
pub fn resolve_push(
    disc_center: Vec2,
    disc_radius: f64,
    box_body: &BoxBody,
    obstacles: &[Rect],
    other_boxes: &[Obb],
    cfg: &SimConfig,
    max_push: f64,
) -> PushResolution {
    let mut bx = *box_body;
    let mut delta = MotionDelta::default();
    let mut blocked = false;
    let mut budget = max_push;

    for _ in 0..MAX_RESOLVE_ITERS {
        let obb = bx.obb();
        let Some(contact) = disc_obb_contact(disc_center, disc_radius, &obb) else {
            break;
        };
        if contact.depth <= cfg.contact_tolerance || budget <= 0.0 {
            break;
        }
        let want = contact.depth.min(budget);
        let dir = -contact.normal;
        let (applied, hit) = clip_box_translation(&obb, dir, want, obstacles, other_boxes);
        if hit {
            blocked = true;
        }
        if applied <= 0.0 {
            break;
        }
        bx.pose.x += dir.x * applied;
        bx.pose.y += dir.y * applied;
        budget -= applied;
        delta.translation += applied;

        let lever = (contact.point - obb.center).cross(dir);
        let theta = cfg.rotation_gain * lever * applied;
        if theta != 0.0 {
            let applied_theta = apply_box_rotation(&mut bx, theta, obstacles, other_boxes);
            delta.rotation += applied_theta.abs();
        }
        if applied + 1e-15 < want {
            break;
        }
    }

    let residual = disc_obb_contact(disc_center, disc_radius, &bx.obb())
        .map(|c| c.depth)
        .unwrap_or(0.0);
    PushResolution {
        pushed: !delta.is_zero(),
        box_after: bx,
        delta,
        blocked_by_obstacle: blocked,
        residual_penetration: residual,
    }
}

/// Clip a disc moving from `from` to `to` against obstacles. Returns the
/// final center and whether the motion was cut short.
fn clip_disc_motion(from: Vec2, to: Vec2, radius: f64, obstacles: &[Rect]) -> (Vec2, bool) {
    let overlaps =
        |p: Vec2| obstacles.iter().any(|r| disc_rect_overlap(p, radius, r) > 0.0);
    if !overlaps(to) {
        return (to, false);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if overlaps(from.lerp(to, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (from.lerp(to, lo), true)
}

/// Pull the disc back along its motion segment until it no longer
/// penetrates the box beyond tolerance (used when the box jams).
fn pull_back_disc(from: Vec2, to: Vec2, radius: f64, obb: &Obb, tolerance: f64) -> Vec2 {
    let penetrates = |p: Vec2| {
        disc_obb_contact(p, radius, obb)
            .map(|c| c.depth > tolerance)
            .unwrap_or(false)
    };
    if !penetrates(to) {
        return to;
    }
    if penetrates(from) {
        return from;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if penetrates(from.lerp(to, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    from.lerp(to, lo)
}

/// Geometric overlap query: does the robot disc or any box overlap an
/// obstacle beyond `tolerance`? Robot-box contact is pushing, not a
/// collision, and is excluded by definition.
pub fn detect_collisions(world: &WorldState, tolerance: f64) -> (bool, bool) {
    let robot_center = world.robot.pose.position();
    let robot_collided = world
        .obstacles
        .iter()
        .any(|r| disc_rect_overlap(robot_center, world.robot.body_radius, r) > tolerance);
    let box_collided = world.boxes.iter().any(|b| {
        let obb = b.obb();
        world
            .obstacles
            .iter()
            .any(|r| obb_rect_overlap(&obb, r) > tolerance)
    });
    (robot_collided, box_collided)
}

/// Advance the world by one action. Substeps integrate the robot, clip it
/// against obstacles, and resolve pushes; motion deltas accumulate across
/// substeps.
pub fn step_world(world: &WorldState, action: Action, cfg: &SimConfig) -> (WorldState, StepOutcome) {
    let mut w = world.clone();
    let mut outcome = StepOutcome::new(w.boxes.len());
    let (omega_l, omega_r) = wheel_command(action, cfg.v_max);
    let n = cfg.substeps.max(1);
    let dt_sub = cfg.dt / n as f64;

    for _ in 0..n {
        let from = w.robot.pose;
        let candidate = integrate_robot(
            from,
            omega_l,
            omega_r,
            w.robot.wheel_radius,
            w.robot.axle_length,
            dt_sub,
        );
        let from_p = from.position();
        let (mut to_p, hit_wall) =
            clip_disc_motion(from_p, candidate.position(), w.robot.body_radius, &w.obstacles);
        if hit_wall {
            outcome.robot_collided = true;
        }

        let budget = from_p.distance(to_p) + cfg.contact_tolerance;
        for i in 0..w.boxes.len() {
            let others: Vec<Obb> = w
                .boxes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| b.obb())
                .collect();
            let res = resolve_push(
                to_p,
                w.robot.body_radius,
                &w.boxes[i],
                &w.obstacles,
                &others,
                cfg,
                budget,
            );
            if res.pushed {
                outcome.deltas[i].accumulate(&res.delta);
                w.boxes[i] = res.box_after;
            }
            if res.blocked_by_obstacle {
                outcome.box_collided = true;
            }
            if res.residual_penetration > cfg.contact_tolerance {
                to_p = pull_back_disc(
                    from_p,
                    to_p,
                    w.robot.body_radius,
                    &w.boxes[i].obb(),
                    cfg.contact_tolerance,
                );
            }
        }

        outcome.robot_path_length += from_p.distance(to_p);
        w.robot.pose = Pose2D {
            x: to_p.x,
            y: to_p.y,
            yaw: candidate.yaw,
        };
    }

    outcome.pushed_box = outcome
        .deltas
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.is_zero())
        .max_by(|(_, a), (_, b)| {
            (a.translation + a.rotation)
                .partial_cmp(&(b.translation + b.rotation))
                .expect("motion deltas are finite")
        })
        .map(|(i, _)| w.boxes[i].id);
    w.time_step_index += 1;
    (w, outcome)
}
