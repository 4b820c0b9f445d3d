//! Near-UAV segment: fuselage scatterers, single-bounce ray superposition and
//! the deterministic departure angles they produce.
//!
//! Each scatterer on the airframe contributes one specular ray
//! `E = R * exp(-j 2 pi d / lambda) / d` with unit incident field. Ray tables
//! produced by an external tracer can be imported in place of the scatterer
//! oracle (see [`RayTable::parse`]).

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::rotation::{angle_unit_vector, vector_angles, Mat3, Vec3};

/// Index reserved for the unobstructed direct ray.
pub const DIRECT_RAY: (usize, usize) = (0, 0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuselageScatterer {
    /// Location in the UAV body frame (m).
    pub location: Vec3,
    /// Complex reflection coefficient as `[re, im]`.
    pub reflection: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuselageScatterSet {
    pub scatterers: Vec<FuselageScatterer>,
    #[serde(default = "default_bounding_radius")]
    pub bounding_radius: f64,
}

fn default_bounding_radius() -> f64 {
    5.0
}

impl FuselageScatterSet {
    /// Synthetic hexacopter layout: six arm-tip scatterers 60 degrees apart.
    ///
    /// Seen from the antenna, the first arm sits at azimuth pi/3 and elevation
    /// pi/12, the departure angles used for the first NLoS path of the
    /// reference scenario. Not derived from a measured airframe.
    pub fn hexacopter() -> Self {
        let arm = 0.6;
        let scatterers = (0..6)
            .map(|k| {
                let dir = angle_unit_vector(PI / 3.0 + k as f64 * PI / 3.0, PI / 12.0)
                    .expect("elevation within range");
                FuselageScatterer {
                    // the FSE vector points from the scatterer to the antenna
                    location: -dir * arm,
                    reflection: Complex64::new(0.25, 0.0),
                }
            })
            .collect();
        FuselageScatterSet {
            scatterers,
            bounding_radius: default_bounding_radius(),
        }
    }

    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bounding_radius > 0.0) {
            return Err(Error::config("fse.bounding_radius", "must be positive"));
        }
        for (i, s) in self.scatterers.iter().enumerate() {
            if s.reflection.norm() > 1.0 + 1e-12 || !s.reflection.is_finite() {
                return Err(Error::config(
                    format!("fse.scatterers[{i}].reflection"),
                    "a passive reflector needs |R| <= 1",
                ));
            }
            if !s.location.iter().all(|x| x.is_finite()) || s.location.norm() > self.bounding_radius {
                return Err(Error::config(
                    format!("fse.scatterers[{i}].location"),
                    format!("must lie within {} m of the body origin", self.bounding_radius),
                ));
            }
        }
        Ok(())
    }
}

/// One traced ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRecord {
    pub path_index: (usize, usize),
    /// Total propagation length (m).
    pub length: f64,
    pub reflection: Complex64,
    /// `R exp(-j 2 pi d / lambda) / d`.
    pub field: Complex64,
    /// Unit FSE directional vector, antenna minus scatterer.
    pub direction: Vec3,
}

fn ray_field(reflection: Complex64, length: f64, wavelength: f64) -> Complex64 {
    reflection * Complex64::from_polar(1.0, -TAU * length / wavelength) / length
}

/// Single-bounce rays from the antenna via each scatterer to `observation`.
///
/// `uav_position` and `posture` place the body frame in the world;
/// `tx_body_offset` is the antenna location in the body frame.
pub fn trace_fuselage_rays(
    set: &FuselageScatterSet,
    uav_position: &Vec3,
    tx_body_offset: &Vec3,
    posture: &Mat3,
    observation: &Vec3,
    wavelength: f64,
) -> Result<Vec<RayRecord>> {
    let tx = uav_position + posture * tx_body_offset;
    if (observation - tx).norm() == 0.0 {
        return Err(Error::degenerate("trace_fuselage_rays", "observation point coincides with the antenna"));
    }
    set.scatterers
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let world = uav_position + posture * s.location;
            let to_scatterer = world - tx;
            let to_obs = observation - world;
            if to_scatterer.norm() == 0.0 || to_obs.norm() == 0.0 {
                return Err(Error::degenerate(
                    "trace_fuselage_rays",
                    format!("scatterer {k} coincides with the antenna or observation point"),
                ));
            }
            let length = to_scatterer.norm() + to_obs.norm();
            Ok(RayRecord {
                path_index: (k + 1, 1),
                length,
                reflection: s.reflection,
                field: ray_field(s.reflection, length, wavelength),
                direction: -to_scatterer / to_scatterer.norm(),
            })
        })
        .collect()
}

/// Unit-coefficient line-of-sight ray from `tx` to `observation`.
pub fn direct_ray(tx: &Vec3, observation: &Vec3, wavelength: f64) -> Result<RayRecord> {
    let d = observation - tx;
    let length = d.norm();
    if length == 0.0 {
        return Err(Error::degenerate("direct_ray", "observation point coincides with the antenna"));
    }
    Ok(RayRecord {
        path_index: DIRECT_RAY,
        length,
        reflection: Complex64::new(1.0, 0.0),
        field: ray_field(Complex64::new(1.0, 0.0), length, wavelength),
        direction: -d / length,
    })
}

/// Coherent field magnitude and the resulting near-UAV path loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NusPathLoss {
    /// `|sum of ray fields|`.
    pub field: f64,
    /// `20 log10(E0 / field)`; `+inf` when the rays cancel.
    pub pl_db: f64,
    pub cancelled: bool,
}

pub fn superposed_field_and_pl(rays: &[RayRecord], reference_field: f64) -> Result<NusPathLoss> {
    if rays.is_empty() {
        return Err(Error::domain("superposed_field_and_pl", "no rays to superpose"));
    }
    if !(reference_field > 0.0) {
        return Err(Error::domain("superposed_field_and_pl", "reference field must be positive"));
    }
    let sum: Complex64 = rays.iter().map(|r| r.field).sum();
    let scale: f64 = rays.iter().map(|r| r.field.norm()).sum();
    let field = sum.norm();
    if field <= 1e-12 * scale {
        return Ok(NusPathLoss {
            field: 0.0,
            pl_db: f64::INFINITY,
            cancelled: true,
        });
    }
    Ok(NusPathLoss {
        field,
        pl_db: 20.0 * (reference_field / field).log10(),
        cancelled: false,
    })
}

/// Departure azimuth/elevation of the FSE vector `tx - scatterer`.
///
/// Straight up or down reports azimuth 0.
pub fn fse_departure_angles(tx_location: &Vec3, scatterer_world: &Vec3) -> Result<(f64, f64)> {
    vector_angles(&(tx_location - scatterer_world))
        .ok_or_else(|| Error::degenerate("fse_departure_angles", "antenna and scatterer coincide"))
}

/// Externally traced rays.
///
/// Text format, comma separated, one header line then one ray per line:
/// `n,m,d_m,reflection_re,reflection_im,dir_x,dir_y,dir_z`. The direction
/// is the FSE vector (antenna minus scattering point) and is normalised on
/// import.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTable {
    pub rays: Vec<RayRecord>,
    pub wavelength: f64,
}

impl RayTable {
    pub fn parse(text: &str, wavelength: f64) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("ray table is empty (header line required)".into()))?;
        let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
        if cols.len() != 8 || cols[0] != "n" || cols[1] != "m" {
            return Err(Error::Parse(format!(
                "ray table header must be `n,m,d_m,reflection_re,reflection_im,dir_x,dir_y,dir_z`, got `{header}`"
            )));
        }
        let mut rays = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 8 {
                return Err(Error::Parse(format!("line {}: expected 8 columns", lineno + 1)));
            }
            let idx = |i: usize| {
                fields[i]
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: column {}: {e}", lineno + 1, i + 1)))
            };
            let num = |i: usize| {
                fields[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: column {}: {e}", lineno + 1, i + 1)))
            };
            let (n, m) = (idx(0)?, idx(1)?);
            let length = num(2)?;
            let reflection = Complex64::new(num(3)?, num(4)?);
            let dir = Vec3::new(num(5)?, num(6)?, num(7)?);
            if !(length > 0.0) || !length.is_finite() {
                return Err(Error::Parse(format!("line {}: ray length must be positive", lineno + 1)));
            }
            if reflection.norm() > 1.0 + 1e-12 {
                return Err(Error::Parse(format!("line {}: |R| must not exceed 1", lineno + 1)));
            }
            if !(dir.norm() > 0.0) || !dir.iter().all(|x| x.is_finite()) {
                return Err(Error::Parse(format!("line {}: direction must be a non-zero vector", lineno + 1)));
            }
            rays.push(RayRecord {
                path_index: (n, m),
                length,
                reflection,
                field: ray_field(reflection, length, wavelength),
                direction: dir.normalize(),
            });
        }
        if rays.is_empty() {
            return Err(Error::Parse("ray table contains no rays".into()));
        }
        Ok(RayTable { rays, wavelength })
    }

    pub fn load(path: &Path, wavelength: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, wavelength)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("n,m,d_m,reflection_re,reflection_im,dir_x,dir_y,dir_z\n");
        for r in &self.rays {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.path_index.0,
                r.path_index.1,
                r.length,
                r.reflection.re,
                r.reflection.im,
                r.direction.x,
                r.direction.y,
                r.direction.z
            ));
        }
        out
    }

    fn min_length(&self) -> f64 {
        self.rays.iter().map(|r| r.length).fold(f64::INFINITY, f64::min)
    }

    /// Rays re-referenced to an observation distance `d`: every length is
    /// shifted by `d - shortest length` (parallel far-field rays).
    pub fn rays_at_distance(&self, d: f64) -> Vec<RayRecord> {
        let shift = d - self.min_length();
        self.rays
            .iter()
            .map(|r| {
                let length = (r.length + shift).max(f64::MIN_POSITIVE);
                RayRecord {
                    length,
                    field: ray_field(r.reflection, length, self.wavelength),
                    ..*r
                }
            })
            .collect()
    }
}

/// Where the near-UAV rays come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FseSource {
    Scatterers(FuselageScatterSet),
    RayTable(RayTable),
}

/// Fuselage-dependent geometry of one NLoS path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsePathGeometry {
    /// Extra length of the fuselage bounce over the straight antenna-to-boundary run (m).
    pub detour: f64,
    pub departure_azimuth: f64,
    pub departure_elevation: f64,
}

/// Near-UAV segment model: ray source plus the reference field `E0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NusModel {
    pub source: FseSource,
    pub wavelength: f64,
    pub reference_field: f64,
}

impl NusModel {
    /// Reference field `4 pi / lambda`: with the direct ray alone the
    /// near-UAV loss equals free-space loss.
    pub fn with_free_space_reference(source: FseSource, wavelength: f64) -> Self {
        NusModel {
            source,
            wavelength,
            reference_field: 2.0 * TAU / wavelength,
        }
    }

    /// Number of distinct fuselage paths available for NLoS assignment.
    pub fn path_count(&self) -> usize {
        match &self.source {
            FseSource::Scatterers(set) => set.len(),
            FseSource::RayTable(t) => t.rays.len(),
        }
    }

    /// All rays reaching `observation`, direct ray included for the scatterer
    /// oracle. Ray tables are taken as complete.
    pub fn rays(&self, tx: &Vec3, posture: &Mat3, observation: &Vec3) -> Result<Vec<RayRecord>> {
        match &self.source {
            FseSource::Scatterers(set) => {
                let mut rays = vec![direct_ray(tx, observation, self.wavelength)?];
                rays.extend(trace_fuselage_rays(
                    set,
                    tx,
                    &Vec3::zeros(),
                    posture,
                    observation,
                    self.wavelength,
                )?);
                Ok(rays)
            }
            FseSource::RayTable(t) => Ok(t.rays_at_distance((observation - tx).norm())),
        }
    }

    pub fn path_loss(&self, tx: &Vec3, posture: &Mat3, observation: &Vec3) -> Result<NusPathLoss> {
        superposed_field_and_pl(&self.rays(tx, posture, observation)?, self.reference_field)
    }

    /// Path loss without any airframe: direct ray only.
    pub fn baseline_path_loss(&self, distance: f64) -> f64 {
        20.0 * (self.reference_field * distance).log10()
    }

    /// Geometry of fuselage path `k` (taken modulo [`Self::path_count`]).
    ///
    /// `los_dir` is the unit direction from the antenna toward the ground
    /// terminal; `boundary` is the slant distance to the edge of the near-UAV
    /// segment along it.
    pub fn path_geometry(
        &self,
        k: usize,
        tx: &Vec3,
        posture: &Mat3,
        los_dir: &Vec3,
        boundary: f64,
    ) -> Result<FsePathGeometry> {
        let count = self.path_count();
        if count == 0 {
            return Err(Error::config("fse", "no fuselage paths configured"));
        }
        match &self.source {
            FseSource::Scatterers(set) => {
                let s = &set.scatterers[k % count];
                let world = tx + posture * s.location;
                let obs = tx + los_dir * boundary;
                let length = (world - tx).norm() + (obs - world).norm();
                let (az, el) = fse_departure_angles(tx, &world)?;
                Ok(FsePathGeometry {
                    detour: (length - boundary).max(0.0),
                    departure_azimuth: az,
                    departure_elevation: el,
                })
            }
            FseSource::RayTable(t) => {
                let r = &t.rays[k % count];
                let (az, el) = vector_angles(&r.direction)
                    .ok_or_else(|| Error::degenerate("path_geometry", "zero ray direction"))?;
                Ok(FsePathGeometry {
                    detour: r.length - t.min_length(),
                    departure_azimuth: az,
                    departure_elevation: el,
                })
            }
        }
    }

    /// Bracket `[d_lo, d_hi]` on `grid` (increasing distances) where the
    /// relative deviation `|PL - PL_baseline| / PL_baseline` first falls to
    /// `threshold` or below and stays there for the rest of the grid.
    pub fn nus_extent(
        &self,
        tx: &Vec3,
        posture: &Mat3,
        direction: &Vec3,
        grid: &[f64],
        threshold: f64,
    ) -> Result<Option<(f64, f64)>> {
        let dir = direction.normalize();
        let mut rel = Vec::with_capacity(grid.len());
        for &d in grid {
            let pl = self.path_loss(tx, posture, &(tx + dir * d))?;
            let base = self.baseline_path_loss(d);
            rel.push(if pl.cancelled {
                f64::INFINITY
            } else {
                (pl.pl_db - base).abs() / base.abs()
            });
        }
        let Some(last_above) = rel.iter().rposition(|&r| r > threshold) else {
            return Ok(None);
        };
        if last_above + 1 >= grid.len() {
            return Ok(None);
        }
        Ok(Some((grid[last_above], grid[last_above + 1])))
    }
}

/// Loads the configured ray source.
pub fn load_source(set: Option<&FuselageScatterSet>, ray_table: Option<&Path>, wavelength: f64) -> Result<FseSource> {
    match (ray_table, set) {
        (Some(path), _) => Ok(FseSource::RayTable(RayTable::load(path, wavelength)?)),
        (None, Some(set)) => Ok(FseSource::Scatterers(set.clone())),
        (None, None) => Ok(FseSource::Scatterers(FuselageScatterSet::hexacopter())),
    }
}
