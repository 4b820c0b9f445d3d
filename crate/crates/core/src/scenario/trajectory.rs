//! Terminal kinematics with closed-form position integrals.

use serde::{Deserialize, Serialize};

use super::rotation::Vec3;
use crate::error::{Error, Result};

/// One `(time, velocity)` sample of a piecewise-linear velocity profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityKnot {
    pub t: f64,
    pub velocity: Vec3,
}

/// Velocity as a function of time.
///
/// Every family has an exact antiderivative, so positions carry no
/// integration error. Arbitrary measured tracks are supplied as
/// piecewise-linear velocity tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityProfile {
    Constant {
        velocity: Vec3,
    },
    /// Linear interpolation between knots, held constant outside them.
    PiecewiseLinear {
        knots: Vec<VelocityKnot>,
    },
    /// Horizontal circle traversed at `angular_rate` (rad/s, counter-clockwise
    /// when positive), starting at polar angle `initial_phase` about the centre,
    /// with an optional constant climb rate.
    CircularArc {
        radius: f64,
        angular_rate: f64,
        #[serde(default)]
        initial_phase: f64,
        #[serde(default)]
        vertical_speed: f64,
    },
}

impl VelocityProfile {
    fn validate(&self) -> Result<()> {
        match self {
            VelocityProfile::Constant { velocity } => {
                if !velocity.iter().all(|x| x.is_finite()) {
                    return Err(Error::config("velocity", "must be finite"));
                }
            }
            VelocityProfile::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err(Error::config("knots", "at least one knot is required"));
                }
                for k in knots {
                    if !k.t.is_finite() || !k.velocity.iter().all(|x| x.is_finite()) {
                        return Err(Error::config("knots", "knot values must be finite"));
                    }
                }
                if knots.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return Err(Error::config("knots", "knot times must be strictly increasing"));
                }
            }
            VelocityProfile::CircularArc {
                radius,
                angular_rate,
                initial_phase,
                vertical_speed,
            } => {
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::config("radius", "must be finite and non-negative"));
                }
                if ![angular_rate, initial_phase, vertical_speed]
                    .iter()
                    .all(|x| x.is_finite())
                {
                    return Err(Error::config("circular_arc", "parameters must be finite"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryTrack {
    pub initial_position: Vec3,
    pub velocity: VelocityProfile,
    #[serde(default)]
    pub t0: f64,
}

impl TrajectoryTrack {
    pub fn new(initial_position: Vec3, velocity: VelocityProfile, t0: f64) -> Result<Self> {
        let track = TrajectoryTrack {
            initial_position,
            velocity,
            t0,
        };
        track.validate()?;
        Ok(track)
    }

    pub fn stationary(position: Vec3) -> Self {
        TrajectoryTrack {
            initial_position: position,
            velocity: VelocityProfile::Constant {
                velocity: Vec3::zeros(),
            },
            t0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.initial_position.iter().all(|x| x.is_finite()) {
            return Err(Error::config("initial_position", "must be finite"));
        }
        if !self.t0.is_finite() {
            return Err(Error::config("t0", "must be finite"));
        }
        self.velocity.validate()
    }

    pub fn velocity_at(&self, t: f64) -> Vec3 {
        match &self.velocity {
            VelocityProfile::Constant { velocity } => *velocity,
            VelocityProfile::PiecewiseLinear { knots } => interpolate_knots(knots, t),
            VelocityProfile::CircularArc {
                radius,
                angular_rate,
                initial_phase,
                vertical_speed,
            } => {
                let theta = initial_phase + angular_rate * (t - self.t0);
                let speed = radius * angular_rate;
                Vec3::new(-speed * theta.sin(), speed * theta.cos(), *vertical_speed)
            }
        }
    }

    /// Position at `t`: the initial position plus the exact velocity integral.
    pub fn position(&self, t: f64) -> Result<Vec3> {
        if !(t >= self.t0) {
            return Err(Error::domain(
                "integrate_position",
                format!("t = {t} precedes track start t0 = {}", self.t0),
            ));
        }
        Ok(self.initial_position + self.displacement(self.t0, t))
    }

    /// Exact `integral of v` over `[a, b]`.
    pub fn displacement(&self, a: f64, b: f64) -> Vec3 {
        if b < a {
            return -self.displacement(b, a);
        }
        match &self.velocity {
            VelocityProfile::Constant { velocity } => velocity * (b - a),
            VelocityProfile::PiecewiseLinear { knots } => integrate_knots(knots, a, b),
            VelocityProfile::CircularArc {
                radius,
                angular_rate,
                initial_phase,
                vertical_speed,
            } => {
                let ta = initial_phase + angular_rate * (a - self.t0);
                let tb = initial_phase + angular_rate * (b - self.t0);
                Vec3::new(
                    radius * (tb.cos() - ta.cos()),
                    radius * (tb.sin() - ta.sin()),
                    vertical_speed * (b - a),
                )
            }
        }
    }
}

/// Free-function form of [`TrajectoryTrack::position`].
pub fn integrate_position(track: &TrajectoryTrack, t: f64) -> Result<Vec3> {
    track.position(t)
}

fn interpolate_knots(knots: &[VelocityKnot], t: f64) -> Vec3 {
    let first = &knots[0];
    let last = &knots[knots.len() - 1];
    if t <= first.t {
        return first.velocity;
    }
    if t >= last.t {
        return last.velocity;
    }
    let i = knots.partition_point(|k| k.t <= t) - 1;
    let (k0, k1) = (&knots[i], &knots[i + 1]);
    let w = (t - k0.t) / (k1.t - k0.t);
    k0.velocity * (1.0 - w) + k1.velocity * w
}

fn integrate_knots(knots: &[VelocityKnot], a: f64, b: f64) -> Vec3 {
    // Break points: every knot inside (a, b). Between consecutive break points
    // the velocity is linear, so the trapezoid rule is exact.
    let mut total = Vec3::zeros();
    let mut left = a;
    for k in knots.iter().filter(|k| k.t > a && k.t < b) {
        total += (interpolate_knots(knots, left) + interpolate_knots(knots, k.t)) * 0.5 * (k.t - left);
        left = k.t;
    }
    total += (interpolate_knots(knots, left) + interpolate_knots(knots, b)) * 0.5 * (b - left);
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn trapezoid(track: &TrajectoryTrack, a: f64, b: f64, step: f64) -> Vec3 {
        let n = ((b - a) / step).round() as usize;
        let h = (b - a) / n as f64;
        let mut acc = (track.velocity_at(a) + track.velocity_at(b)) * 0.5;
        for i in 1..n {
            acc += track.velocity_at(a + i as f64 * h);
        }
        acc * h
    }

    fn arc(h: f64) -> TrajectoryTrack {
        TrajectoryTrack::new(
            Vec3::new(100.0, 0.0, h),
            VelocityProfile::CircularArc {
                radius: 100.0,
                angular_rate: 0.3,
                initial_phase: 0.0,
                vertical_speed: 0.0,
            },
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_velocity_stays_put() {
        let track = TrajectoryTrack::stationary(Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(track.position(17.5).unwrap(), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn constant_velocity() {
        let track = TrajectoryTrack::new(
            Vec3::new(0.0, 0.0, 150.0),
            VelocityProfile::Constant {
                velocity: Vec3::new(30.0, 0.0, 0.0),
            },
            0.0,
        )
        .unwrap();
        assert_eq!(track.position(2.0).unwrap(), Vec3::new(60.0, 0.0, 150.0));
    }

    #[test]
    fn position_at_t0_is_exact() {
        let track = arc(150.0);
        assert_eq!(track.position(0.0).unwrap(), track.initial_position);
    }

    #[test]
    fn circular_arc_half_turn() {
        let track = arc(150.0);
        let t = PI / 0.3;
        let p = track.position(t).unwrap();
        assert!((p - Vec3::new(-100.0, 0.0, 150.0)).norm() < 1e-9);
        // independent check: quadrature of the velocity field
        let q = track.initial_position + trapezoid(&track, 0.0, t, 1e-4);
        assert!((p - q).norm() < 1e-6);
    }

    #[test]
    fn circular_arc_matches_closed_form() {
        let track = arc(20.0);
        for &t in &[0.5, 1.0, 3.3, 7.0] {
            let p = track.position(t).unwrap();
            let expected = Vec3::new(100.0 * (0.3 * t).cos(), 100.0 * (0.3 * t).sin(), 20.0);
            assert!((p - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn time_before_start_is_rejected() {
        let track = arc(150.0);
        assert!(matches!(track.position(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn piecewise_linear_integral() {
        let track = TrajectoryTrack::new(
            Vec3::zeros(),
            VelocityProfile::PiecewiseLinear {
                knots: vec![
                    VelocityKnot { t: 1.0, velocity: Vec3::new(0.0, 0.0, 0.0) },
                    VelocityKnot { t: 3.0, velocity: Vec3::new(4.0, 0.0, -2.0) },
                ],
            },
            0.0,
        )
        .unwrap();
        // 0 on [0,1], ramp to 4 on [1,3] (area 4), held at 4 on [3,4] (area 4)
        let p = track.position(4.0).unwrap();
        assert!((p - Vec3::new(8.0, 0.0, -4.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_unsorted_knots() {
        let err = TrajectoryTrack::new(
            Vec3::zeros(),
            VelocityProfile::PiecewiseLinear {
                knots: vec![
                    VelocityKnot { t: 2.0, velocity: Vec3::zeros() },
                    VelocityKnot { t: 1.0, velocity: Vec3::zeros() },
                ],
            },
            0.0,
        );
        assert!(err.is_err());
    }

    proptest! {
        #[test]
        fn displacement_is_additive(t1 in 0.0f64..20.0, r in 1.0f64..200.0, w in -1.0f64..1.0,
                                    vz in -5.0f64..5.0, ph in 0.0..TAU) {
            let track = TrajectoryTrack::new(
                Vec3::new(3.0, -4.0, 100.0),
                VelocityProfile::CircularArc { radius: r, angular_rate: w, initial_phase: ph, vertical_speed: vz },
                0.0,
            ).unwrap();
            let t2 = t1 + 1.0;
            let lhs = track.position(t2).unwrap();
            let rhs = track.position(t1).unwrap() + trapezoid(&track, t1, t2, 1e-4);
            prop_assert!((lhs - rhs).norm() < 1e-6);
        }

        #[test]
        fn piecewise_linear_matches_quadrature(v0 in -30.0f64..30.0, v1 in -30.0f64..30.0, t1 in 0.0f64..5.0) {
            let track = TrajectoryTrack::new(
                Vec3::zeros(),
                VelocityProfile::PiecewiseLinear {
                    knots: vec![
                        VelocityKnot { t: 0.5, velocity: Vec3::new(v0, 1.0, 0.0) },
                        VelocityKnot { t: 1.7, velocity: Vec3::new(v1, -2.0, 3.0) },
                        VelocityKnot { t: 2.2, velocity: Vec3::new(0.0, 0.0, 0.0) },
                    ],
                },
                0.0,
            ).unwrap();
            let lhs = track.position(t1 + 1.0).unwrap() - track.position(t1).unwrap();
            let rhs = trapezoid(&track, t1, t1 + 1.0, 1e-4);
            prop_assert!((lhs - rhs).norm() < 1e-6);
        }
    }
}
