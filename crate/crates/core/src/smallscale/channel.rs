//! Channel model: link geometry over time, per-pair path sets and CIR frames.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::kernels::{
    draw_los_phases, path_powers, polarised_gain, pvf_coefficient, update_ngs_geometry, PolarisationMatrix,
};
use super::segment::{draw_segment, SegmentAnchor, SegmentSchedule, SmallScaleParams, StationarySegment};
use crate::error::{Error, Result};
use crate::fse::{FsePathGeometry, NusModel};
use crate::largescale::{fsl_path_loss, BreakpointCache, LinkGeometry, PlBranch, SegmentedPathLoss, ShadowFadingParams};
use crate::scenario::rotation::{angle_unit_vector, velocity_rotation_matrix, Mat3, Vec3};
use crate::scenario::{AntennaArray, Posture, PostureTrack, TrajectoryTrack, VelocityProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub trajectory: TrajectoryTrack,
    pub posture: PostureTrack,
    pub array: AntennaArray,
}

#[derive(Debug, Clone)]
pub struct LargeScaleModel {
    pub pathloss: SegmentedPathLoss,
    pub shadow: ShadowFadingParams,
}

/// Everything needed to build a [`ChannelModel`].
#[derive(Debug, Clone)]
pub struct ChannelSetup {
    pub carrier_frequency_ghz: f64,
    pub wave_speed: f64,
    pub duration: f64,
    pub xi_nus: f64,
    pub xi_ngs: f64,
    pub tx: Terminal,
    pub rx: Terminal,
    pub small_scale: SmallScaleParams,
    /// Near-UAV model; `None` turns fuselage scattering off.
    pub fuselage: Option<NusModel>,
    pub large_scale: Option<LargeScaleModel>,
}

/// Immutable channel model; realisations and frames are pure functions of it.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    setup: ChannelSetup,
    wavelength: f64,
    schedule: SegmentSchedule,
}

/// All random state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub seed: u64,
    pub segments: Vec<StationarySegment>,
    pub los_polarisation: PolarisationMatrix,
}

/// Link geometry at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub t: f64,
    pub tx: Vec3,
    pub rx: Vec3,
    pub posture: Posture,
    pub tx_rotation: Mat3,
    pub rx_rotation: Mat3,
    /// Unit vector from the UAV toward the ground terminal.
    pub direction: Vec3,
    /// Sine of the UAV elevation seen from the ground terminal.
    pub sin_elevation: f64,
    /// Slant run from the UAV to the near-ground segment.
    pub free_space_run: f64,
    pub entry: Vec3,
    /// Slant extent of the near-UAV segment.
    pub nus_boundary: f64,
    pub pvf: f64,
    pub rice_factor: f64,
}

/// Per-pair path set of one segment before Rician and cross-fade weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPaths {
    pub los_delay: f64,
    pub los_gain: Complex64,
    pub delays: Vec<f64>,
    pub powers: Vec<f64>,
    pub gains: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay: f64,
    pub gain: Complex64,
    pub los: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResponse {
    pub p: usize,
    pub q: usize,
    /// LoS tap first, then NLoS sub-paths segment by segment.
    pub taps: Vec<Tap>,
}

impl PairResponse {
    /// Narrowband `(LoS, NLoS)` sums.
    pub fn narrowband(&self) -> (Complex64, Complex64) {
        self.taps.iter().fold((Complex64::default(), Complex64::default()), |(l, n), tap| {
            if tap.los {
                (l + tap.gain, n)
            } else {
                (l, n + tap.gain)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScaleSample {
    pub distance: f64,
    pub los_pl_db: f64,
    pub nlos_pl_db: f64,
    pub nlos_branch: PlBranch,
    pub shadow_db: f64,
    pub extrapolated: bool,
}

impl LargeScaleSample {
    fn los_amplitude(&self) -> f64 {
        10f64.powf(-self.los_pl_db / 20.0)
    }

    fn nlos_amplitude(&self) -> f64 {
        10f64.powf(-(self.nlos_pl_db + self.shadow_db) / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirFrame {
    pub t: f64,
    pub rice_factor: f64,
    pub pvf: f64,
    pub large_scale: Option<LargeScaleSample>,
    pub pairs: Vec<PairResponse>,
}

impl ChannelModel {
    pub fn new(setup: ChannelSetup) -> Result<Self> {
        if !(setup.carrier_frequency_ghz > 0.0) || !setup.carrier_frequency_ghz.is_finite() {
            return Err(Error::config("carrier_frequency_ghz", "must be positive"));
        }
        if !(setup.wave_speed > 0.0) {
            return Err(Error::config("wave_speed_m_s", "must be positive"));
        }
        if !(setup.xi_nus > 0.0 && setup.xi_ngs > 0.0) {
            return Err(Error::config("xi", "segment extents must be positive"));
        }
        setup.small_scale.validate()?;
        for (name, term) in [("tx", &setup.tx), ("rx", &setup.rx)] {
            term.trajectory.validate()?;
            term.posture.validate()?;
            term.array.validate(name)?;
        }
        if setup.tx.array.hpbw.iter().any(|h| *h > std::f64::consts::PI) {
            return Err(Error::config("tx.hpbw", "beam-width projections must not exceed pi"));
        }
        if let Some(ls) = &setup.large_scale {
            ls.shadow.validate()?;
            if ls.pathloss.ngs.is_none() {
                return Err(Error::config("large_scale", "a near-ground model is required"));
            }
        }
        let wavelength = setup.wave_speed / (setup.carrier_frequency_ghz * 1e9);
        let schedule = SegmentSchedule::new(setup.duration, &setup.small_scale)?;
        Ok(ChannelModel {
            setup,
            wavelength,
            schedule,
        })
    }

    pub fn setup(&self) -> &ChannelSetup {
        &self.setup
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn schedule(&self) -> &SegmentSchedule {
        &self.schedule
    }

    pub fn pair_count(&self) -> (usize, usize) {
        (self.setup.tx.array.len(), self.setup.rx.array.len())
    }

    pub fn link_state(&self, t: f64) -> Result<LinkState> {
        let s = &self.setup;
        let tx = s.tx.trajectory.position(t)?;
        let rx = s.rx.trajectory.position(t)?;
        let posture = s.tx.posture.at(t);
        let d = rx - tx;
        let dist = d.norm();
        if dist == 0.0 {
            return Err(Error::degenerate("link_state", "terminals coincide"));
        }
        let direction = d / dist;
        let sin_elevation = -direction.z;
        if !(tx.z > s.xi_ngs && rx.z < s.xi_ngs && sin_elevation > 0.0) {
            return Err(Error::degenerate(
                "link_state",
                format!(
                    "UAV at height {} and ground terminal at {} do not straddle the near-ground height {}",
                    tx.z, rx.z, s.xi_ngs
                ),
            ));
        }
        let free_space_run = (tx.z - s.xi_ngs) / sin_elevation;
        Ok(LinkState {
            t,
            tx,
            rx,
            posture,
            tx_rotation: posture.matrix(),
            rx_rotation: velocity_rotation_matrix(&s.rx.trajectory.velocity_at(t)),
            direction,
            sin_elevation,
            free_space_run,
            entry: tx + direction * free_space_run,
            nus_boundary: s.xi_nus / sin_elevation,
            pvf: pvf_coefficient(posture.roll, posture.pitch, posture.yaw, &s.tx.array.hpbw)?,
            rice_factor: s.small_scale.rice_factor(t),
        })
    }

    /// Draws segment state from per-segment streams (in parallel) and the
    /// LoS polarisation from the run stream.
    pub fn realize(&self, seed: u64) -> Result<Realization> {
        let los_polarisation = draw_los_phases(&mut crate::rng::substream(seed, crate::rng::RUN_STREAM));
        let segments = (0..self.schedule.count)
            .into_par_iter()
            .map(|k| self.draw_segment(seed, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Realization {
            seed,
            segments,
            los_polarisation,
        })
    }

    fn draw_segment(&self, seed: u64, k: usize) -> Result<StationarySegment> {
        let start = self.schedule.start(k);
        let state = self.link_state(start)?;
        let anchor = SegmentAnchor {
            start,
            tx: state.tx,
            rx: state.rx,
            entry: state.entry,
        };
        let shadow = self.setup.large_scale.as_ref().map(|ls| ls.shadow);
        let mut rng = crate::rng::segment_stream(seed, k);
        let mut seg = draw_segment(&mut rng, k, anchor, &self.setup.small_scale, self.setup.wave_speed, |r| {
            shadow.map_or(0.0, |p| p.sample_db(r))
        })?;
        seg.departure_margin = self.departure_margin(start);
        Ok(seg)
    }

    /// Bound on UAV displacement from the segment start over the segment
    /// and its ramps, plus a wavelength.
    fn departure_margin(&self, start: f64) -> f64 {
        let track = &self.setup.tx.trajectory;
        let lo = (start - 0.5 * self.schedule.ramp).max(track.t0);
        let hi = start + self.schedule.length + 0.5 * self.schedule.ramp;
        let mut times: Vec<f64> = (0..=64).map(|i| lo + (hi - lo) * i as f64 / 64.0).collect();
        if let VelocityProfile::PiecewiseLinear { knots } = &track.velocity {
            times.extend(knots.iter().map(|k| k.t).filter(|t| (lo..=hi).contains(t)));
        }
        let speed = times.iter().map(|&t| track.velocity_at(t).norm()).fold(0.0, f64::max);
        speed * (hi - lo) + self.wavelength
    }

    /// Fuselage geometry of every near-UAV path at this instant.
    pub fn fuselage_geometry(&self, state: &LinkState) -> Result<Vec<FsePathGeometry>> {
        match &self.setup.fuselage {
            Some(nus) => (0..nus.path_count())
                .map(|k| nus.path_geometry(k, &state.tx, &state.tx_rotation, &state.direction, state.nus_boundary))
                .collect(),
            None => Ok(Vec::new()),
        }
    }

    /// Path set between transmit element `p` and receive element `q` for
    /// one segment.
    pub fn pair_paths(
        &self,
        real: &Realization,
        segment: &StationarySegment,
        state: &LinkState,
        fuselage: &[FsePathGeometry],
        p: usize,
        q: usize,
    ) -> Result<PairPaths> {
        let s = &self.setup;
        let lambda = self.wavelength;
        let tx_offset = state.tx_rotation * s.tx.array.elements[p];
        let tx_el = state.tx + tx_offset;
        let rx_el = state.rx + state.rx_rotation * s.rx.array.elements[q];
        let los_vec = rx_el - tx_el;
        let los_len = los_vec.norm();
        if los_len == 0.0 {
            return Err(Error::degenerate("pair_paths", "transmit and receive elements coincide"));
        }
        let los_dir = los_vec / los_len;
        let los_gain = polarised_gain(
            s.tx.array.field(&los_dir, &state.tx_rotation),
            &real.los_polarisation,
            s.rx.array.field(&-los_dir, &state.rx_rotation),
        ) * state.pvf
            * Complex64::from_polar(1.0, -TAU * los_len / lambda);

        let anchor = &segment.anchor;
        let e_q = rx_el - anchor.rx;
        let count = segment.subpath_count();
        let mut lengths = Vec::with_capacity(count);
        let mut shadows = Vec::with_capacity(count);
        let mut raw = Vec::with_capacity(count);
        for (n, cluster) in segment.clusters.iter().enumerate() {
            let fse = (!fuselage.is_empty()).then(|| fuselage[n % fuselage.len()]);
            let fse_dir = match fse {
                Some(g) => Some(angle_unit_vector(g.departure_azimuth, g.departure_elevation)?),
                None => None,
            };
            for sp in &cluster.subpaths {
                let legs = update_ngs_geometry(&sp.scatterer_offset, &tx_offset, &e_q, &state.entry, &anchor.rx)?;
                let (detour, departure) = match (fse, fse_dir) {
                    (Some(g), Some(dir)) => (g.detour, dir),
                    _ => (
                        segment.departure_margin - (state.tx - anchor.tx).dot(&sp.departure),
                        sp.departure,
                    ),
                };
                let length = detour + state.free_space_run + legs.length();
                let arrival = legs.a / legs.a.norm();
                let pattern = polarised_gain(
                    s.tx.array.field(&departure, &state.tx_rotation),
                    &sp.polarisation,
                    s.rx.array.field(&arrival, &state.rx_rotation),
                );
                lengths.push(length);
                shadows.push(cluster.shadow_db);
                raw.push(pattern * state.pvf * Complex64::from_polar(1.0, -TAU * length / lambda));
            }
        }
        let excess: Vec<f64> = lengths.iter().map(|l| (l - los_len) / s.wave_speed).collect();
        let powers = path_powers(&excess, s.small_scale.delay_scalar, s.small_scale.delay_spread_s, &shadows)?;
        let gains = raw.iter().zip(&powers).map(|(g, p)| g * p.sqrt()).collect();
        Ok(PairPaths {
            los_delay: los_len / s.wave_speed,
            los_gain,
            delays: lengths.iter().map(|l| l / s.wave_speed).collect(),
            powers,
            gains,
        })
    }

    /// Large-scale losses at this instant. `cache` avoids re-solving the
    /// continuity offsets while the break points barely move.
    pub fn large_scale(
        &self,
        real: &Realization,
        state: &LinkState,
        cache: Option<&mut BreakpointCache>,
    ) -> Result<Option<LargeScaleSample>> {
        let Some(ls) = &self.setup.large_scale else {
            return Ok(None);
        };
        let g = LinkGeometry {
            tx: state.tx,
            rx: state.rx,
            posture: state.tx_rotation,
        };
        let bp = match cache {
            Some(c) => c.get(&ls.pathloss, &g)?,
            None => ls.pathloss.breakpoints(&g)?,
        };
        let distance = g.distance();
        let nlos = ls.pathloss.segmented_pl(&g, &bp, distance)?;
        let shadow_db = if nlos.branch == PlBranch::Ngs {
            let mut sf = 0.0;
            for w in self.schedule.weights(state.t)? {
                sf += w.weight * self.segment(real, w.segment)?.shadow_db;
            }
            sf
        } else {
            0.0
        };
        Ok(Some(LargeScaleSample {
            distance,
            los_pl_db: fsl_path_loss(distance, ls.pathloss.fc_ghz)?,
            nlos_pl_db: nlos.pl_db,
            nlos_branch: nlos.branch,
            shadow_db,
            extrapolated: nlos.extrapolated,
        }))
    }

    fn segment<'a>(&self, real: &'a Realization, k: usize) -> Result<&'a StationarySegment> {
        real.segments
            .get(k)
            .ok_or_else(|| Error::Sequencing(format!("segment {k} has not been realised")))
    }

    /// Channel impulse response at `t` for the selected element pairs
    /// (all pairs when `pairs` is `None`).
    pub fn frame(
        &self,
        real: &Realization,
        t: f64,
        pairs: Option<&[(usize, usize)]>,
        cache: Option<&mut BreakpointCache>,
    ) -> Result<CirFrame> {
        let state = self.link_state(t)?;
        let large = self.large_scale(real, &state, cache)?;
        let fuselage = self.fuselage_geometry(&state)?;
        let weights = self.schedule.weights(t)?;
        let k = state.rice_factor;
        let (los_amp, nlos_amp) = match &large {
            Some(l) => (l.los_amplitude(), l.nlos_amplitude()),
            None => (1.0, 1.0),
        };
        let los_scale = (k / (k + 1.0)).sqrt() * los_amp;
        let nlos_scale = (1.0 / (k + 1.0)).sqrt() * nlos_amp;
        let (np, nq) = self.pair_count();
        let all: Vec<(usize, usize)>;
        let selected = match pairs {
            Some(sel) => {
                if sel.iter().any(|&(p, q)| p >= np || q >= nq) {
                    return Err(Error::domain("frame", "element pair out of range"));
                }
                sel
            }
            None => {
                all = (0..np).flat_map(|p| (0..nq).map(move |q| (p, q))).collect();
                &all
            }
        };
        let mut out = Vec::with_capacity(selected.len());
        for &(p, q) in selected {
            let mut taps = Vec::new();
            for (i, w) in weights.iter().enumerate() {
                let seg = self.segment(real, w.segment)?;
                let paths = self.pair_paths(real, seg, &state, &fuselage, p, q)?;
                if i == 0 {
                    taps.push(Tap {
                        delay: paths.los_delay,
                        gain: paths.los_gain * los_scale,
                        los: true,
                    });
                }
                let amp = w.weight.sqrt() * nlos_scale;
                taps.extend(paths.delays.iter().zip(&paths.gains).map(|(&delay, g)| Tap {
                    delay,
                    gain: g * amp,
                    los: false,
                }));
            }
            out.push(PairResponse { p, q, taps });
        }
        Ok(CirFrame {
            t,
            rice_factor: k,
            pvf: state.pvf,
            large_scale: large,
            pairs: out,
        })
    }

    /// Narrowband `(LoS, NLoS)` series of one pair, evaluated in parallel.
    pub fn narrowband(&self, real: &Realization, times: &[f64], p: usize, q: usize) -> Result<Vec<(Complex64, Complex64)>> {
        times
            .par_iter()
            .enumerate()
            .map(|(i, &t)| {
                self.frame(real, t, Some(&[(p, q)]), None)
                    .map(|f| f.pairs[0].narrowband())
                    .map_err(|e| at_sample(i, t, e))
            })
            .collect()
    }
}

/// Attaches the sample position to a geometry error.
pub fn at_sample(index: usize, t: f64, e: Error) -> Error {
    if e.is_geometry() && !matches!(e, Error::AtSample { .. }) {
        Error::AtSample {
            index,
            time_s: t,
            source: Box::new(e),
        }
    } else {
        e
    }
}
