//! Stationary segments: parameters, the segment timeline and per-segment draws.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, TAU};

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::kernels::{draw_nlos_phases, scatterer_distance, PolarisationMatrix};
use crate::error::{Error, Result};
use crate::scenario::rotation::{angle_unit_vector, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallScaleParams {
    /// Inclusive range of the number of NLoS paths drawn per segment.
    pub path_count: [usize; 2],
    pub subpaths: usize,
    pub delay_scalar: f64,
    pub delay_spread_s: f64,
    pub cross_polar_db: f64,
    pub cluster_shadow_std_db: f64,
    /// Elevation range of the arrival directions at the ground terminal.
    pub arrival_elevation_rad: [f64; 2],
    /// Elevation range of the departure directions when fuselage scattering is off.
    pub departure_elevation_rad: [f64; 2],
    pub segment_length_s: f64,
    /// Cross-fade window as a fraction of the segment length ...
    pub ramp_fraction: f64,
    /// ... capped at this duration.
    pub ramp_max_s: f64,
    /// `[t_s, K_dB]` knots, linear in dB, held outside; `-inf` gives K = 0.
    pub rice_factor_db: Vec<[f64; 2]>,
}

impl Default for SmallScaleParams {
    fn default() -> Self {
        SmallScaleParams {
            path_count: [4, 10],
            subpaths: 20,
            delay_scalar: 2.3,
            delay_spread_s: 0.3e-6,
            cross_polar_db: 8.0,
            cluster_shadow_std_db: 3.0,
            arrival_elevation_rad: [0.0, FRAC_PI_6],
            departure_elevation_rad: [-FRAC_PI_2, 0.0],
            segment_length_s: 1.0,
            ramp_fraction: 0.1,
            ramp_max_s: 0.1,
            rice_factor_db: vec![[0.0, 6.0]],
        }
    }
}

impl SmallScaleParams {
    pub fn validate(&self) -> Result<()> {
        let [n0, n1] = self.path_count;
        if n0 == 0 || n1 < n0 {
            return Err(Error::config("small_scale.path_count", "need 1 <= min <= max"));
        }
        if self.subpaths == 0 {
            return Err(Error::config("small_scale.subpaths", "must be at least 1"));
        }
        if !(self.delay_scalar > 1.0) {
            return Err(Error::config("small_scale.delay_scalar", "must exceed 1"));
        }
        if !(self.delay_spread_s > 0.0) {
            return Err(Error::config("small_scale.delay_spread_s", "must be positive"));
        }
        if !self.cross_polar_db.is_finite() {
            return Err(Error::config("small_scale.cross_polar_db", "must be finite"));
        }
        if !(self.cluster_shadow_std_db >= 0.0) {
            return Err(Error::config("small_scale.cluster_shadow_std_db", "must be >= 0"));
        }
        for (name, [lo, hi]) in [
            ("arrival_elevation_rad", self.arrival_elevation_rad),
            ("departure_elevation_rad", self.departure_elevation_rad),
        ] {
            if !(lo >= -FRAC_PI_2 && hi >= lo && hi <= FRAC_PI_2) {
                return Err(Error::config(format!("small_scale.{name}"), "need -pi/2 <= min <= max <= pi/2"));
            }
        }
        if !(self.segment_length_s > 0.0) {
            return Err(Error::config("small_scale.segment_length_s", "must be positive"));
        }
        if !(self.ramp_fraction >= 0.0 && self.ramp_fraction < 0.5) {
            return Err(Error::config(
                "small_scale.ramp_fraction",
                "the ramp must be shorter than half a segment",
            ));
        }
        if !(self.ramp_max_s >= 0.0) {
            return Err(Error::config("small_scale.ramp_max_s", "must be >= 0"));
        }
        if self.rice_factor_db.is_empty() {
            return Err(Error::config("small_scale.rice_factor_db", "at least one knot is required"));
        }
        // -inf dB is allowed: a pure NLoS channel
        if self.rice_factor_db.iter().any(|k| !k[0].is_finite() || k[1].is_nan() || k[1] == f64::INFINITY)
            || self.rice_factor_db.windows(2).any(|w| !(w[1][0] > w[0][0]))
        {
            return Err(Error::config(
                "small_scale.rice_factor_db",
                "knots must be finite with increasing times",
            ));
        }
        Ok(())
    }

    /// Rician factor (linear) at `t`.
    pub fn rice_factor(&self, t: f64) -> f64 {
        let k = &self.rice_factor_db;
        let db = if t <= k[0][0] {
            k[0][1]
        } else if t >= k[k.len() - 1][0] {
            k[k.len() - 1][1]
        } else {
            let i = k.partition_point(|x| x[0] <= t) - 1;
            let w = (t - k[i][0]) / (k[i + 1][0] - k[i][0]);
            if w == 0.0 {
                k[i][1]
            } else {
                k[i][1] * (1.0 - w) + k[i + 1][1] * w
            }
        };
        10f64.powf(db / 10.0)
    }

    pub fn cross_polar_linear(&self) -> f64 {
        10f64.powf(self.cross_polar_db / 10.0)
    }
}

/// One segment's share of the channel at a time instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentWeight {
    pub segment: usize,
    /// Power weight; amplitudes scale with its square root.
    pub weight: f64,
}

/// Segment boundaries and cross-fade windows over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSchedule {
    pub length: f64,
    pub ramp: f64,
    pub count: usize,
}

impl SegmentSchedule {
    pub fn new(duration: f64, params: &SmallScaleParams) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::config("duration_s", "must be positive"));
        }
        let length = params.segment_length_s;
        let ramp = (params.ramp_fraction * length).min(params.ramp_max_s);
        if !(length > 2.0 * ramp) {
            return Err(Error::config("small_scale", "segment length must exceed twice the ramp window"));
        }
        let count = ((duration / length).ceil() as usize).max(1);
        Ok(SegmentSchedule { length, ramp, count })
    }

    pub fn start(&self, segment: usize) -> f64 {
        segment as f64 * self.length
    }

    /// Active segments at `t` with their power weights (summing to one).
    pub fn weights(&self, t: f64) -> Result<Vec<SegmentWeight>> {
        if !t.is_finite() {
            return Err(Error::domain("segment_weights", "time must be finite"));
        }
        let k = ((t / self.length).floor().max(0.0) as usize).min(self.count - 1);
        let half = 0.5 * self.ramp;
        let blend = |boundary: usize| -> Result<Vec<SegmentWeight>> {
            let lin = ((t - self.start(boundary) + half) / self.ramp).clamp(0.0, 1.0);
            let w = super::kernels::ramp_weight(lin)?;
            Ok(vec![
                SegmentWeight {
                    segment: boundary - 1,
                    weight: 1.0 - w,
                },
                SegmentWeight {
                    segment: boundary,
                    weight: w,
                },
            ])
        };
        if self.ramp > 0.0 {
            if k >= 1 && t - self.start(k) < half {
                return blend(k);
            }
            if k + 1 < self.count && self.start(k + 1) - t < half {
                return blend(k + 1);
            }
        }
        Ok(vec![SegmentWeight { segment: k, weight: 1.0 }])
    }
}

/// Geometry frozen at the start of a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentAnchor {
    pub start: f64,
    pub tx: Vec3,
    pub rx: Vec3,
    /// Where the link enters the near-ground segment.
    pub entry: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubPath {
    /// Unit direction from the receiver toward the last-bounce scatterer.
    pub arrival: Vec3,
    /// Receiver-to-scatterer vector at the segment start.
    pub scatterer_offset: Vec3,
    /// Near-ground excess length over the direct run (m).
    pub excess_length: f64,
    /// Random departure direction, used when fuselage scattering is off.
    pub departure: Vec3,
    pub polarisation: PolarisationMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathCluster {
    pub shadow_db: f64,
    pub subpaths: Vec<SubPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySegment {
    pub index: usize,
    pub anchor: SegmentAnchor,
    pub clusters: Vec<PathCluster>,
    /// Large-scale shadowing of this segment (dB).
    pub shadow_db: f64,
    /// Constant fuselage-free detour that keeps every departure-projected
    /// path length positive while the UAV moves within the segment (m).
    pub departure_margin: f64,
}

impl StationarySegment {
    pub fn subpath_count(&self) -> usize {
        self.clusters.iter().map(|c| c.subpaths.len()).sum()
    }
}

/// Draws every random quantity of one segment.
///
/// `large_scale_shadow` draws the segment's large-scale shadowing (dB).
pub fn draw_segment<R: Rng + ?Sized>(
    rng: &mut R,
    index: usize,
    anchor: SegmentAnchor,
    params: &SmallScaleParams,
    wave_speed: f64,
    large_scale_shadow: impl FnOnce(&mut R) -> f64,
) -> Result<StationarySegment> {
    let shadow_db = large_scale_shadow(rng);
    let entry_offset = anchor.entry - anchor.rx;
    let [n0, n1] = params.path_count;
    let n = rng.random_range(n0..=n1);
    let excess = Exp::new(1.0 / (params.delay_scalar * params.delay_spread_s))
        .map_err(|e| Error::config("small_scale.delay_spread_s", e.to_string()))?;
    let cluster_sf = Normal::new(0.0, params.cluster_shadow_std_db)
        .map_err(|e| Error::config("small_scale.cluster_shadow_std_db", e.to_string()))?;
    let kappa = params.cross_polar_linear();
    let [ae0, ae1] = params.arrival_elevation_rad;
    let [de0, de1] = params.departure_elevation_rad;
    let mut clusters = Vec::with_capacity(n);
    for _ in 0..n {
        let shadow = cluster_sf.sample(rng);
        let mut subpaths = Vec::with_capacity(params.subpaths);
        for _ in 0..params.subpaths {
            let arrival = angle_unit_vector(rng.random_range(0.0..TAU), uniform(rng, ae0, ae1))?;
            // zero-probability draw of an exactly zero excess is nudged off the origin
            let excess_length = (wave_speed * excess.sample(rng)).max(1e-9);
            let rho = scatterer_distance(&entry_offset, &arrival, excess_length)?;
            let departure = angle_unit_vector(rng.random_range(0.0..TAU), uniform(rng, de0, de1))?;
            subpaths.push(SubPath {
                arrival,
                scatterer_offset: arrival * rho,
                excess_length,
                departure,
                polarisation: draw_nlos_phases(rng, kappa)?,
            });
        }
        clusters.push(PathCluster { shadow_db: shadow, subpaths });
    }
    Ok(StationarySegment {
        index,
        anchor,
        clusters,
        shadow_db,
        departure_margin: 0.0,
    })
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}
