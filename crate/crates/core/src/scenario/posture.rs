//! Time-varying attitude of the aerial terminal.

use serde::{Deserialize, Serialize};

use super::rotation::{posture_matrix, wrap_pi, wrap_two_pi, Mat3};
use crate::error::{Error, Result};

/// A scalar angle track in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngleProfile {
    Constant {
        value: f64,
    },
    /// `initial + rate * t`.
    Linear {
        #[serde(default)]
        initial: f64,
        rate: f64,
    },
    /// `[t, angle]` knots, linear in between, held outside.
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
    /// `mean + amplitude * sin(2 pi frequency t + phase)`.
    Sinusoid {
        #[serde(default)]
        mean: f64,
        amplitude: f64,
        frequency_hz: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Default for AngleProfile {
    fn default() -> Self {
        AngleProfile::Constant { value: 0.0 }
    }
}

impl AngleProfile {
    /// Unwrapped angle at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            AngleProfile::Constant { value } => *value,
            AngleProfile::Linear { initial, rate } => initial + rate * t,
            AngleProfile::PiecewiseLinear { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if t <= first[0] {
                    return first[1];
                }
                if t >= last[0] {
                    return last[1];
                }
                let i = knots.partition_point(|k| k[0] <= t) - 1;
                let (a, b) = (knots[i], knots[i + 1]);
                let w = (t - a[0]) / (b[0] - a[0]);
                a[1] * (1.0 - w) + b[1] * w
            }
            AngleProfile::Sinusoid {
                mean,
                amplitude,
                frequency_hz,
                phase,
            } => mean + amplitude * (std::f64::consts::TAU * frequency_hz * t + phase).sin(),
        }
    }

    /// True when the angle never changes.
    pub fn is_static(&self) -> bool {
        match self {
            AngleProfile::Constant { .. } => true,
            AngleProfile::Linear { rate, .. } => *rate == 0.0,
            AngleProfile::PiecewiseLinear { knots } => knots.windows(2).all(|w| w[0][1] == w[1][1]),
            AngleProfile::Sinusoid { amplitude, frequency_hz, .. } => {
                *amplitude == 0.0 || *frequency_hz == 0.0
            }
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        let finite = match self {
            AngleProfile::Constant { value } => value.is_finite(),
            AngleProfile::Linear { initial, rate } => initial.is_finite() && rate.is_finite(),
            AngleProfile::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err(Error::config(field, "at least one knot is required"));
                }
                if knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::config(field, "knot times must be strictly increasing"));
                }
                knots.iter().all(|k| k[0].is_finite() && k[1].is_finite())
            }
            AngleProfile::Sinusoid {
                mean,
                amplitude,
                frequency_hz,
                phase,
            } => [mean, amplitude, frequency_hz, phase].iter().all(|x| x.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::config(field, "angle track values must be finite"))
        }
    }
}

/// Roll/pitch/yaw at one instant, reduced into their declared ranges:
/// roll and pitch in `(-pi, pi]`, yaw in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posture {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Posture {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Posture {
            roll: wrap_pi(roll),
            pitch: wrap_pi(pitch),
            yaw: wrap_two_pi(yaw),
        }
    }

    pub fn level() -> Self {
        Posture::new(0.0, 0.0, 0.0)
    }

    pub fn matrix(&self) -> Mat3 {
        posture_matrix(self.roll, self.pitch, self.yaw)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostureTrack {
    #[serde(default)]
    pub roll: AngleProfile,
    #[serde(default)]
    pub pitch: AngleProfile,
    #[serde(default)]
    pub yaw: AngleProfile,
}

impl PostureTrack {
    pub fn level() -> Self {
        PostureTrack::default()
    }

    pub fn with_roll_rate(rate: f64) -> Self {
        PostureTrack {
            roll: AngleProfile::Linear { initial: 0.0, rate },
            ..PostureTrack::default()
        }
    }

    pub fn with_pitch_rate(rate: f64) -> Self {
        PostureTrack {
            pitch: AngleProfile::Linear { initial: 0.0, rate },
            ..PostureTrack::default()
        }
    }

    pub fn at(&self, t: f64) -> Posture {
        Posture::new(
            self.roll.value_at(t),
            self.pitch.value_at(t),
            self.yaw.value_at(t),
        )
    }

    pub fn is_static(&self) -> bool {
        self.roll.is_static() && self.pitch.is_static() && self.yaw.is_static()
    }

    pub fn validate(&self) -> Result<()> {
        self.roll.validate("posture.roll")?;
        self.pitch.validate("posture.pitch")?;
        self.yaw.validate("posture.yaw")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    #[test]
    fn angles_are_reduced_into_ranges() {
        let p = Posture::new(3.0 * PI / 2.0, -PI, -FRAC_PI_4);
        assert!((p.roll + PI / 2.0).abs() < 1e-15);
        assert_eq!(p.pitch, PI);
        assert!((p.yaw - (TAU - FRAC_PI_4)).abs() < 1e-15);
    }

    #[test]
    fn linear_roll_track() {
        let track = PostureTrack::with_roll_rate(FRAC_PI_4);
        let p = track.at(2.0);
        assert!((p.roll - PI / 2.0).abs() < 1e-15);
        assert_eq!(p.pitch, 0.0);
        assert!(!track.is_static());
        assert!(PostureTrack::level().is_static());
    }

    #[test]
    fn piecewise_track_interpolates() {
        let prof = AngleProfile::PiecewiseLinear {
            knots: vec![[0.0, 0.0], [2.0, 1.0]],
        };
        assert_eq!(prof.value_at(1.0), 0.5);
        assert_eq!(prof.value_at(5.0), 1.0);
        assert_eq!(prof.value_at(-1.0), 0.0);
    }

    #[test]
    fn invalid_track_is_rejected() {
        let track = PostureTrack {
            roll: AngleProfile::Linear {
                initial: 0.0,
                rate: f64::NAN,
            },
            ..PostureTrack::default()
        };
        assert!(track.validate().is_err());
    }
}
