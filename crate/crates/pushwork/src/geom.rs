//! Minimal 2D geometry: vectors, axis-aligned rectangles, oriented boxes,
//! and the contact queries the pushing model needs.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is
    /// counterclockwise from `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).length()
    }

    /// Unit vector in the same direction, or `None` for (near-)zero input.
    pub fn normalized(self) -> Option<Vec2> {
        let len = self.length();
        if len > 1e-12 {
            Some(Vec2::new(self.x / len, self.y / len))
        } else {
            None
        }
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle given by its min/max corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn from_center_half_extents(center: Vec2, half: Vec2) -> Self {
        Self {
            min: center - half,
            max: center + half,
        }
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Vec2 {
        (self.max - self.min) * 0.5
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp_point(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }

    pub fn is_valid(&self) -> bool {
        self.max.x > self.min.x && self.max.y > self.min.y
    }
}

/// Oriented box: center, yaw, half extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Vec2,
    pub yaw: f64,
    pub half_extents: Vec2,
}

impl Obb {
    pub fn new(center: Vec2, yaw: f64, half_extents: Vec2) -> Self {
        Self {
            center,
            yaw,
            half_extents,
        }
    }

    pub fn to_local(&self, p: Vec2) -> Vec2 {
        (p - self.center).rotated(-self.yaw)
    }

    pub fn to_world(&self, local: Vec2) -> Vec2 {
        local.rotated(self.yaw) + self.center
    }

    pub fn axes(&self) -> [Vec2; 2] {
        let (s, c) = self.yaw.sin_cos();
        [Vec2::new(c, s), Vec2::new(-s, c)]
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let h = self.half_extents;
        [
            self.to_world(Vec2::new(-h.x, -h.y)),
            self.to_world(Vec2::new(h.x, -h.y)),
            self.to_world(Vec2::new(h.x, h.y)),
            self.to_world(Vec2::new(-h.x, h.y)),
        ]
    }
}

/// Contact between a disc and another shape.
///
/// `normal` points from the shape's surface toward the disc center;
/// `point` is the contact point on the shape's boundary.
#[derive(Debug, Clone, Copy)]
pub struct DiscContact {
    pub depth: f64,
    pub normal: Vec2,
    pub point: Vec2,
}

/// Overlap depth of a disc against an axis-aligned rectangle.
/// Positive means penetration; zero or negative means touching/separated.
pub fn disc_rect_overlap(center: Vec2, radius: f64, rect: &Rect) -> f64 {
    let clamped = rect.clamp_point(center);
    let diff = center - clamped;
    let dist_sq = diff.length_squared();
    if dist_sq > 0.0 {
        radius - dist_sq.sqrt()
    } else {
        // Disc center inside the rectangle: penetration is the radius plus
        // the distance to the nearest face.
        let to_face = (center.x - rect.min.x)
            .min(rect.max.x - center.x)
            .min(center.y - rect.min.y)
            .min(rect.max.y - center.y);
        radius + to_face
    }
}

/// Full disc-vs-oriented-box contact query.
/// Returns `None` when the disc does not reach the box boundary.
pub fn disc_obb_contact(center: Vec2, radius: f64, obb: &Obb) -> Option<DiscContact> {
    let local = obb.to_local(center);
    let h = obb.half_extents;
    let clamped = Vec2::new(local.x.clamp(-h.x, h.x), local.y.clamp(-h.y, h.y));
    let diff = local - clamped;
    let dist_sq = diff.length_squared();

    if dist_sq > 1e-24 {
        let dist = dist_sq.sqrt();
        let depth = radius - dist;
        if depth <= 0.0 {
            return None;
        }
        let normal_local = Vec2::new(diff.x / dist, diff.y / dist);
        Some(DiscContact {
            depth,
            normal: normal_local.rotated(obb.yaw),
            point: obb.to_world(clamped),
        })
    } else {
        // Center inside the box: push out through the nearest face.
        let dx_pos = h.x - local.x;
        let dx_neg = local.x + h.x;
        let dy_pos = h.y - local.y;
        let dy_neg = local.y + h.y;
        let min_d = dx_pos.min(dx_neg).min(dy_pos).min(dy_neg);
        let (normal_local, point_local) = if min_d == dx_pos {
            (Vec2::new(1.0, 0.0), Vec2::new(h.x, local.y))
        } else if min_d == dx_neg {
            (Vec2::new(-1.0, 0.0), Vec2::new(-h.x, local.y))
        } else if min_d == dy_pos {
            (Vec2::new(0.0, 1.0), Vec2::new(local.x, h.y))
        } else {
            (Vec2::new(0.0, -1.0), Vec2::new(local.x, -h.y))
        };
        Some(DiscContact {
            depth: radius + min_d,
            normal: normal_local.rotated(obb.yaw),
            point: obb.to_world(point_local),
        })
    }
}

fn project(corners: &[Vec2], axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        let p = c.dot(axis);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    (lo, hi)
}

/// Separating-axis overlap depth between two convex corner sets.
/// Positive: minimum penetration across axes. Negative: a separating gap.
fn sat_overlap(corners_a: &[Vec2], corners_b: &[Vec2], axes: &[Vec2]) -> f64 {
    let mut min_overlap = f64::INFINITY;
    for &axis in axes {
        let (a_lo, a_hi) = project(corners_a, axis);
        let (b_lo, b_hi) = project(corners_b, axis);
        let overlap = a_hi.min(b_hi) - a_lo.max(b_lo);
        min_overlap = min_overlap.min(overlap);
    }
    min_overlap
}

/// Overlap depth between an oriented box and an axis-aligned rectangle.
pub fn obb_rect_overlap(obb: &Obb, rect: &Rect) -> f64 {
    let axes = [
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
        obb.axes()[0],
        obb.axes()[1],
    ];
    sat_overlap(&obb.corners(), &rect.corners(), &axes)
}

/// Overlap depth between two oriented boxes.
pub fn obb_obb_overlap(a: &Obb, b: &Obb) -> f64 {
    let axes = [a.axes()[0], a.axes()[1], b.axes()[0], b.axes()[1]];
    sat_overlap(&a.corners(), &b.corners(), &axes)
}

/// Normalize an angle to the half-open interval (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}
