//! Friction-work pricing of pushed boxes.
//!
//! A box of mass `m` sliding distance `dx` on a floor with friction `mu`
//! dissipates `mu * m * g * dx` of work. Rotating it in place by `theta`
//! dissipates friction torque integrated over the rectangular contact
//! patch, assuming uniform pressure. [`step_work`] prices one step of
//! motion; [`RunningBounds`] turns raw joules into unit-interval costs by
//! normalizing against the running min/max of everything seen so far.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Absolute span (joules) below which running bounds are considered
/// degenerate and the normalized cost is defined as 0.
pub const DEGENERATE_SPAN: f64 = 1e-12;

/// When `min(X, Y) / max(X, Y)` drops below this, the closed form of the
/// rotation integral is numerically singular and the quadrature estimate
/// is used instead.
pub const ASPECT_FALLBACK_RATIO: f64 = 1e-6;

/// Grid resolution for the quadrature fallback path.
const FALLBACK_RESOLUTION: u32 = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("quadrature resolution must be at least 2, got {0}")]
    ResolutionTooSmall(u32),
}

fn require_positive(name: &'static str, value: f64) -> Result<f64, CostError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CostError::NonPositive { name, value })
    }
}

fn require_non_negative(name: &'static str, value: f64) -> Result<f64, CostError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(CostError::Negative { name, value })
    }
}

/// Box/floor interface: contact rectangle dimensions, box mass, friction
/// coefficient, gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPatch {
    pub width_x: f64,
    pub length_y: f64,
    pub mass: f64,
    pub friction_mu: f64,
    pub gravity: f64,
}

impl ContactPatch {
    pub fn new(
        width_x: f64,
        length_y: f64,
        mass: f64,
        friction_mu: f64,
        gravity: f64,
    ) -> Result<Self, CostError> {
        Ok(Self {
            width_x: require_positive("width_x", width_x)?,
            length_y: require_positive("length_y", length_y)?,
            mass: require_positive("mass", mass)?,
            friction_mu: require_non_negative("friction_mu", friction_mu)?,
            gravity: require_positive("gravity", gravity)?,
        })
    }
}

/// Per-step box motion magnitudes: centroid path length and yaw change.
/// Both are non-negative; friction work does not care about direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionDelta {
    pub translation: f64,
    pub rotation: f64,
}

impl MotionDelta {
    pub fn new(translation: f64, rotation: f64) -> Result<Self, CostError> {
        Ok(Self {
            translation: require_non_negative("translation", translation)?,
            rotation: require_non_negative("rotation", rotation)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.translation == 0.0 && self.rotation == 0.0
    }

    pub fn accumulate(&mut self, other: &MotionDelta) {
        self.translation += other.translation;
        self.rotation += other.rotation;
    }
}

/// Surface integral of radial distance over the centered rectangle
/// `[-X/2, X/2] x [-Y/2, Y/2]`, in cubic meters. This is the shape factor
/// of the rotational friction work.
///
/// Evaluated in closed form; extreme aspect ratios fall back to the
/// quadrature estimate because the closed form loses precision as
/// `phi = atan(Y/X)` approaches 0 or pi/2.
pub fn rotation_shape_integral(width_x: f64, length_y: f64) -> Result<f64, CostError> {
    let x = require_positive("width_x", width_x)?;
    let y = require_positive("length_y", length_y)?;

    if x.min(y) / x.max(y) < ASPECT_FALLBACK_RATIO {
        return quadrature_oracle(x, y, FALLBACK_RESOLUTION);
    }

    // sin/cos of phi = atan(y/x) computed from the sides directly.
    let hyp = x.hypot(y);
    let sin_phi = y / hyp;
    let cos_phi = x / hyp;
    // tan(phi/2) = sin(phi) / (1 + cos(phi)), stable on (0, pi/2).
    let tan_half = sin_phi / (1.0 + cos_phi);

    let term_x = x.powi(3) / 12.0 * (sin_phi / (cos_phi * cos_phi) + ((1.0 + sin_phi) / cos_phi).ln());
    let term_y = y.powi(3) / 12.0 * (-cos_phi / (sin_phi * sin_phi) + tan_half.ln());
    Ok(term_x - term_y)
}

/// Midpoint-rule estimate of the same integral, independent of the closed
/// form. Converges to [`rotation_shape_integral`] as `resolution` grows.
pub fn quadrature_oracle(width_x: f64, length_y: f64, resolution: u32) -> Result<f64, CostError> {
    let x = require_positive("width_x", width_x)?;
    let y = require_positive("length_y", length_y)?;
    if resolution < 2 {
        return Err(CostError::ResolutionTooSmall(resolution));
    }

    if resolution % 2 == 0 {
        // Even grids are symmetric about both axes; integrating one
        // quadrant reproduces the full-grid midpoint sum exactly.
        let m = (resolution / 2) as usize;
        let wx = (x / 2.0) / m as f64;
        let wy = (y / 2.0) / m as f64;
        let cell = wx * wy;
        let row_sums: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|j| {
                let py = (j as f64 + 0.5) * wy;
                let mut s = 0.0;
                for i in 0..m {
                    let px = (i as f64 + 0.5) * wx;
                    s += px.hypot(py);
                }
                s
            })
            .collect();
        // Sequential fold keeps the result independent of thread scheduling.
        Ok(4.0 * cell * row_sums.iter().sum::<f64>())
    } else {
        let n = resolution as usize;
        let wx = x / n as f64;
        let wy = y / n as f64;
        let cell = wx * wy;
        let row_sums: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let py = -y / 2.0 + (j as f64 + 0.5) * wy;
                let mut s = 0.0;
                for i in 0..n {
                    let px = -x / 2.0 + (i as f64 + 0.5) * wx;
                    s += px.hypot(py);
                }
                s
            })
            .collect();
        Ok(cell * row_sums.iter().sum::<f64>())
    }
}

/// Virtual friction work (joules) of one step of box motion:
/// translational sliding plus rotational dissipation over the contact patch.
pub fn step_work(patch: &ContactPatch, delta: &MotionDelta) -> f64 {
    let normal_force = patch.mass * patch.gravity;
    let translational = patch.friction_mu * normal_force * delta.translation;
    if delta.rotation == 0.0 {
        return translational;
    }
    let shape = rotation_shape_integral(patch.width_x, patch.length_y)
        .expect("patch dimensions validated on construction");
    let rotational = patch.friction_mu * normal_force / (patch.width_x * patch.length_y)
        * delta.rotation
        * shape;
    translational + rotational
}

/// One priced step: raw joules plus its normalized cost in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub raw_work: f64,
    pub normalized_cost: f64,
}

/// Streaming min/max accumulator used to normalize works into [0, 1].
///
/// Not safe for concurrent mutation; callers sharing one instance across
/// environments must serialize updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "BoundsRepr", into = "BoundsRepr")]
pub struct RunningBounds {
    min_seen: f64,
    max_seen: f64,
    count: u64,
}

/// Wire form of [`RunningBounds`]: unset bounds are `None` rather than
/// infinities, which JSON cannot carry.
#[derive(Serialize, Deserialize)]
struct BoundsRepr {
    min_seen: Option<f64>,
    max_seen: Option<f64>,
    count: u64,
}

impl From<RunningBounds> for BoundsRepr {
    fn from(b: RunningBounds) -> Self {
        Self {
            min_seen: b.min_seen(),
            max_seen: b.max_seen(),
            count: b.count,
        }
    }
}

impl From<BoundsRepr> for RunningBounds {
    fn from(r: BoundsRepr) -> Self {
        if r.count == 0 {
            RunningBounds::new()
        } else {
            RunningBounds {
                min_seen: r.min_seen.unwrap_or(f64::INFINITY),
                max_seen: r.max_seen.unwrap_or(f64::NEG_INFINITY),
                count: r.count,
            }
        }
    }
}

impl Default for RunningBounds {
    fn default() -> Self {
        Self::new()
    }
}

impl RunningBounds {
    pub fn new() -> Self {
        Self {
            min_seen: f64::INFINITY,
            max_seen: f64::NEG_INFINITY,
            count: 0,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn min_seen(&self) -> Option<f64> {
        (self.count > 0).then_some(self.min_seen)
    }

    pub fn max_seen(&self) -> Option<f64> {
        (self.count > 0).then_some(self.max_seen)
    }

    /// Fold `raw_work` into the bounds, then normalize it against them.
    /// Degenerate bounds (first sample, constant streams) yield cost 0.
    pub fn update_and_normalize(&mut self, raw_work: f64) -> Result<CostSample, CostError> {
        let w = require_non_negative("raw_work", raw_work)?;
        self.min_seen = self.min_seen.min(w);
        self.max_seen = self.max_seen.max(w);
        self.count += 1;
        Ok(CostSample {
            raw_work: w,
            normalized_cost: self.normalize(w),
        })
    }

    /// Normalize without updating the bounds (evaluation mode). The result
    /// is clamped to [0, 1] since the value may fall outside what training
    /// observed.
    pub fn normalize_frozen(&self, raw_work: f64) -> Result<CostSample, CostError> {
        let w = require_non_negative("raw_work", raw_work)?;
        Ok(CostSample {
            raw_work: w,
            normalized_cost: self.normalize(w).clamp(0.0, 1.0),
        })
    }

    fn normalize(&self, w: f64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let span = self.max_seen - self.min_seen;
        if span <= DEGENERATE_SPAN {
            0.0
        } else {
            (w - self.min_seen) / span
        }
    }
}

/// Total work of an episode: the sum of its per-step works.
pub fn accumulate_episode(step_works: &[f64]) -> f64 {
    debug_assert!(step_works.iter().all(|w| *w >= 0.0));
    step_works.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_2: f64 = std::f64::consts::SQRT_2;

    /// Independent analytic value for a square patch of side `a`:
    /// (a^3 / 6) * (sqrt(2) + ln(1 + sqrt(2))).
    fn square_integral(a: f64) -> f64 {
        a.powi(3) / 6.0 * (SQRT_2 + (1.0 + SQRT_2).ln())
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn closed_form_matches_square_analytic() {
        let v = rotation_shape_integral(0.4, 0.4).unwrap();
        assert!(rel_err(v, square_integral(0.4)) < 1e-12, "got {v}");
        // Six-significant-figure value for the 0.4 m square.
        assert!(rel_err(v, 0.0244866) < 2e-5);
    }

    #[test]
    fn closed_form_symmetric_in_sides() {
        let a = rotation_shape_integral(0.2, 0.6).unwrap();
        let b = rotation_shape_integral(0.6, 0.2).unwrap();
        assert!(rel_err(a, b) < 1e-12);
        assert!(a > 0.0);
    }

    #[test]
    fn closed_form_vanishes_with_contact_area() {
        let v = rotation_shape_integral(1e-5, 0.5).unwrap();
        assert!(v > 0.0 && v < 1e-6);
        // Below the fallback ratio the quadrature path takes over and the
        // value keeps shrinking.
        let w = rotation_shape_integral(1e-9, 0.5).unwrap();
        assert!(w > 0.0 && w < v);
    }

    #[test]
    fn non_positive_dimension_rejected() {
        assert!(matches!(
            rotation_shape_integral(0.0, 1.0),
            Err(CostError::NonPositive { name: "width_x", .. })
        ));
        assert!(matches!(
            rotation_shape_integral(1.0, -2.0),
            Err(CostError::NonPositive { name: "length_y", .. })
        ));
        assert!(quadrature_oracle(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn quadrature_unit_square() {
        let v = quadrature_oracle(1.0, 1.0, 2048).unwrap();
        assert!((v - 0.382598).abs() < 1e-5, "got {v}");
        assert!(rel_err(v, square_integral(1.0)) < 1e-5);
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        let closed = rotation_shape_integral(0.4, 0.4).unwrap();
        let quad = quadrature_oracle(0.4, 0.4, 2048).unwrap();
        assert!(rel_err(quad, closed) < 1e-5);
    }

    #[test]
    fn quadrature_refinement_shrinks_error() {
        let exact = rotation_shape_integral(0.3, 0.9).unwrap();
        let mut last = f64::INFINITY;
        for res in [64u32, 128, 256, 512] {
            let err = (quadrature_oracle(0.3, 0.9, res).unwrap() - exact).abs();
            assert!(err < last, "error did not shrink at resolution {res}");
            last = err;
        }
    }

    #[test]
    fn quadrature_odd_resolution_consistent() {
        let even = quadrature_oracle(0.5, 0.7, 1024).unwrap();
        let odd = quadrature_oracle(0.5, 0.7, 1023).unwrap();
        assert!(rel_err(even, odd) < 1e-4);
    }

    #[test]
    fn closed_form_vs_quadrature_random_patches() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x: f64 = rng.gen_range(0.01..10.0);
            let aspect: f64 = rng.gen_range(1.0..100.0);
            let y = (x / aspect).max(0.01);
            let closed = rotation_shape_integral(x, y).unwrap();
            let quad = quadrature_oracle(x, y, 1024).unwrap();
            assert!(
                rel_err(closed, quad) < 1e-5,
                "x={x} y={y} closed={closed} quad={quad}"
            );
        }
    }

    #[test]
    fn step_work_translational_only() {
        let patch = ContactPatch::new(0.4, 0.4, 10.0, 0.8, 9.81).unwrap();
        let delta = MotionDelta::new(0.05, 0.0).unwrap();
        let w = step_work(&patch, &delta);
        assert!((w - 3.9240).abs() < 1e-10, "got {w}");
    }

    #[test]
    fn step_work_zero_motion_zero_work() {
        let patch = ContactPatch::new(0.3, 0.7, 25.0, 0.5, 9.81).unwrap();
        let delta = MotionDelta::default();
        assert_eq!(step_work(&patch, &delta), 0.0);
    }

    #[test]
    fn step_work_zero_friction_zero_work() {
        let patch = ContactPatch::new(0.3, 0.7, 25.0, 0.0, 9.81).unwrap();
        let delta = MotionDelta::new(1.0, 1.0).unwrap();
        assert_eq!(step_work(&patch, &delta), 0.0);
    }

    #[test]
    fn step_work_rotational_only() {
        let patch = ContactPatch::new(0.4, 0.4, 10.0, 0.5, 9.81).unwrap();
        let delta = MotionDelta::new(0.0, std::f64::consts::FRAC_PI_2).unwrap();
        let w = step_work(&patch, &delta);
        // 0.5 * (98.1 / 0.16) * (pi/2) * shape(0.4, 0.4)
        let expected = 0.5 * (98.1 / 0.16) * std::f64::consts::FRAC_PI_2 * square_integral(0.4);
        assert!(rel_err(w, expected) < 1e-12);
        assert!((w - 11.791).abs() < 1e-3, "got {w}");
        // Cross-check the rotational term against the quadrature estimate.
        let quad_shape = quadrature_oracle(0.4, 0.4, 2048).unwrap();
        let via_quad = 0.5 * (98.1 / 0.16) * std::f64::consts::FRAC_PI_2 * quad_shape;
        assert!(rel_err(w, via_quad) < 1e-5);
    }

    #[test]
    fn bounds_first_sample_costs_zero() {
        let mut b = RunningBounds::new();
        let s = b.update_and_normalize(5.0).unwrap();
        assert_eq!(s.normalized_cost, 0.0);
        assert_eq!(b.count(), 1);
        assert_eq!(b.min_seen(), Some(5.0));
        assert_eq!(b.max_seen(), Some(5.0));
    }

    #[test]
    fn bounds_hand_trace() {
        let mut b = RunningBounds::new();
        let costs: Vec<f64> = [2.0, 10.0, 6.0]
            .iter()
            .map(|w| b.update_and_normalize(*w).unwrap().normalized_cost)
            .collect();
        assert_eq!(costs, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn bounds_new_maximum_costs_one() {
        let mut b = RunningBounds::new();
        b.update_and_normalize(2.0).unwrap();
        b.update_and_normalize(10.0).unwrap();
        let s = b.update_and_normalize(14.0).unwrap();
        assert_eq!(s.normalized_cost, 1.0);
        assert_eq!(b.min_seen(), Some(2.0));
        assert_eq!(b.max_seen(), Some(14.0));
    }

    #[test]
    fn bounds_constant_stream_costs_zero() {
        let mut b = RunningBounds::new();
        for _ in 0..100 {
            let s = b.update_and_normalize(3.5).unwrap();
            assert_eq!(s.normalized_cost, 0.0);
        }
    }

    #[test]
    fn bounds_reject_negative_work() {
        let mut b = RunningBounds::new();
        assert!(b.update_and_normalize(-1.0).is_err());
        assert_eq!(b.count(), 0);
    }

    #[test]
    fn frozen_normalization_clamps() {
        let mut b = RunningBounds::new();
        b.update_and_normalize(2.0).unwrap();
        b.update_and_normalize(10.0).unwrap();
        let hi = b.normalize_frozen(20.0).unwrap();
        assert_eq!(hi.normalized_cost, 1.0);
        let lo = b.normalize_frozen(1.0).unwrap();
        assert_eq!(lo.normalized_cost, 0.0);
        // Frozen queries do not move the bounds.
        assert_eq!(b.max_seen(), Some(10.0));
        assert_eq!(b.count(), 2);
    }

    #[test]
    fn accumulate_episode_sums() {
        assert_eq!(accumulate_episode(&[]), 0.0);
        assert_eq!(accumulate_episode(&[1.0, 2.5, 0.0]), 3.5);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn step_work_linear_in_each_factor(
                mu in 0.01f64..2.0,
                mass in 0.1f64..100.0,
                dx in 0.0f64..1.0,
                theta in 0.0f64..1.0,
            ) {
                let patch = ContactPatch::new(0.4, 0.6, mass, mu, 9.81).unwrap();
                let patch2mu = ContactPatch::new(0.4, 0.6, mass, 2.0 * mu, 9.81).unwrap();
                let patch2m = ContactPatch::new(0.4, 0.6, 2.0 * mass, mu, 9.81).unwrap();
                let d = MotionDelta::new(dx, theta).unwrap();
                let w = step_work(&patch, &d);
                prop_assert!(w >= 0.0);
                prop_assert!((step_work(&patch2mu, &d) - 2.0 * w).abs() <= 1e-9 * w.max(1.0));
                prop_assert!((step_work(&patch2m, &d) - 2.0 * w).abs() <= 1e-9 * w.max(1.0));
                let d2x = MotionDelta::new(2.0 * dx, 0.0).unwrap();
                let d1x = MotionDelta::new(dx, 0.0).unwrap();
                prop_assert!((step_work(&patch, &d2x) - 2.0 * step_work(&patch, &d1x)).abs()
                    <= 1e-9 * w.max(1.0));
                let d2t = MotionDelta::new(0.0, 2.0 * theta).unwrap();
                let d1t = MotionDelta::new(0.0, theta).unwrap();
                prop_assert!((step_work(&patch, &d2t) - 2.0 * step_work(&patch, &d1t)).abs()
                    <= 1e-9 * w.max(1.0));
            }

            #[test]
            fn normalized_costs_stay_in_unit_interval(works in prop::collection::vec(0.0f64..1e6, 1..200)) {
                let mut b = RunningBounds::new();
                for w in &works {
                    let s = b.update_and_normalize(*w).unwrap();
                    prop_assert!((0.0..=1.0).contains(&s.normalized_cost));
                }
                let lo = b.min_seen().unwrap();
                let hi = b.max_seen().unwrap();
                for w in &works {
                    prop_assert!(lo <= *w && *w <= hi);
                }
            }

            #[test]
            fn final_bounds_permutation_invariant(mut works in prop::collection::vec(0.0f64..1e3, 1..50)) {
                let mut a = RunningBounds::new();
                for w in &works {
                    a.update_and_normalize(*w).unwrap();
                }
                works.reverse();
                let mut b = RunningBounds::new();
                for w in &works {
                    b.update_and_normalize(*w).unwrap();
                }
                prop_assert_eq!(a.min_seen(), b.min_seen());
                prop_assert_eq!(a.max_seen(), b.max_seen());
            }

            #[test]
            fn episode_sum_permutation_invariant(works in prop::collection::vec(0.0f64..1e3, 0..40)) {
                let total = accumulate_episode(&works);
                let mut rev = works.clone();
                rev.reverse();
                prop_assert!((accumulate_episode(&rev) - total).abs() < 1e-9);
            }

            #[test]
            fn closed_form_symmetry_random(x in 0.01f64..10.0, y in 0.01f64..10.0) {
                let a = rotation_shape_integral(x, y).unwrap();
                let b = rotation_shape_integral(y, x).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }
}
