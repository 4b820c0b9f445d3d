//! Antenna arrays and element patterns.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use super::rotation::{vector_angles, Mat3, Vec3};
use crate::error::{Error, Result};

/// Sampled pattern on an azimuth x elevation grid, bilinearly interpolated.
/// Azimuth is periodic over `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternTable {
    pub azimuths: Vec<f64>,
    pub elevations: Vec<f64>,
    /// `vertical[i][j]` at `elevations[i]`, `azimuths[j]`.
    pub vertical: Vec<Vec<f64>>,
    pub horizontal: Vec<Vec<f64>>,
}

impl PatternTable {
    fn validate(&self) -> Result<()> {
        let (na, ne) = (self.azimuths.len(), self.elevations.len());
        if na == 0 || ne == 0 {
            return Err(Error::config("pattern.azimuths", "pattern grid must be non-empty"));
        }
        if self.azimuths.windows(2).any(|w| !(w[1] > w[0]))
            || self.azimuths[0] < 0.0
            || self.azimuths[na - 1] >= TAU
        {
            return Err(Error::config(
                "pattern.azimuths",
                "must be strictly increasing within [0, 2pi)",
            ));
        }
        if self.elevations.windows(2).any(|w| !(w[1] > w[0]))
            || self.elevations[0] < -FRAC_PI_2
            || self.elevations[ne - 1] > FRAC_PI_2
        {
            return Err(Error::config(
                "pattern.elevations",
                "must be strictly increasing within [-pi/2, pi/2]",
            ));
        }
        for (name, grid) in [("pattern.vertical", &self.vertical), ("pattern.horizontal", &self.horizontal)] {
            if grid.len() != ne || grid.iter().any(|row| row.len() != na) {
                return Err(Error::config(name, "grid shape must be elevations x azimuths"));
            }
            if grid.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::config(name, "values must be finite"));
            }
        }
        Ok(())
    }

    fn lookup(&self, alpha: f64, beta: f64) -> (f64, f64) {
        let az = alpha.rem_euclid(TAU);
        let na = self.azimuths.len();
        // periodic bracket in azimuth
        let j1 = self.azimuths.partition_point(|&a| a <= az);
        let (j0, j1, wa) = if na == 1 {
            (0, 0, 0.0)
        } else if j1 == 0 || j1 == na {
            let a0 = self.azimuths[na - 1];
            let span = self.azimuths[0] + TAU - a0;
            let off = if az >= a0 { az - a0 } else { az + TAU - a0 };
            (na - 1, 0, off / span)
        } else {
            let (a0, a1) = (self.azimuths[j1 - 1], self.azimuths[j1]);
            (j1 - 1, j1, (az - a0) / (a1 - a0))
        };
        let ne = self.elevations.len();
        let el = beta.clamp(self.elevations[0], self.elevations[ne - 1]);
        let (i0, i1, we) = if ne == 1 {
            (0, 0, 0.0)
        } else {
            let i1 = self.elevations.partition_point(|&e| e <= el).clamp(1, ne - 1);
            let (e0, e1) = (self.elevations[i1 - 1], self.elevations[i1]);
            (i1 - 1, i1, (el - e0) / (e1 - e0))
        };
        let bilinear = |g: &Vec<Vec<f64>>| {
            let top = g[i0][j0] * (1.0 - wa) + g[i0][j1] * wa;
            let bottom = g[i1][j0] * (1.0 - wa) + g[i1][j1] * wa;
            top * (1.0 - we) + bottom * we
        };
        (bilinear(&self.vertical), bilinear(&self.horizontal))
    }

    fn max_gain(&self) -> f64 {
        self.vertical
            .iter()
            .flatten()
            .zip(self.horizontal.iter().flatten())
            .map(|(v, h)| v * v + h * h)
            .fold(0.0, f64::max)
    }
}

/// Element field pattern returning `(F_V, F_H)` for a local-frame direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AntennaPattern {
    /// Unit vertical polarisation in every direction.
    Isotropic,
    /// Half-wave dipole along the local z-axis, vertically polarised.
    Dipole,
    Table(PatternTable),
}

impl AntennaPattern {
    /// Field components for a unit direction in the element's local frame.
    pub fn field(&self, local_dir: &Vec3) -> (f64, f64) {
        match self {
            AntennaPattern::Isotropic => (1.0, 0.0),
            AntennaPattern::Dipole => {
                let sin_el = local_dir.z.clamp(-1.0, 1.0);
                let cos_el = (1.0 - sin_el * sin_el).max(0.0).sqrt();
                if cos_el < 1e-12 {
                    (0.0, 0.0)
                } else {
                    ((FRAC_PI_2 * sin_el).cos() / cos_el, 0.0)
                }
            }
            AntennaPattern::Table(table) => match vector_angles(local_dir) {
                Some((alpha, beta)) => table.lookup(alpha, beta),
                None => (0.0, 0.0),
            },
        }
    }

    /// Upper bound of `F_V^2 + F_H^2` over all directions.
    pub fn max_gain(&self) -> f64 {
        match self {
            AntennaPattern::Isotropic | AntennaPattern::Dipole => 1.0,
            AntennaPattern::Table(t) => t.max_gain(),
        }
    }
}

/// Element layout plus a shared element pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaArray {
    /// Element positions relative to the array centre, in the terminal's
    /// local frame (metres).
    pub elements: Vec<Vec3>,
    pub pattern: AntennaPattern,
    /// Half-power beam width projected on the roll, pitch and yaw axes (rad).
    #[serde(default = "default_hpbw")]
    pub hpbw: [f64; 3],
}

fn default_hpbw() -> [f64; 3] {
    // half-wave dipole, about 78 degrees
    [1.3614; 3]
}

impl AntennaArray {
    /// Uniform linear array along the local x-axis, centred on the origin.
    pub fn uniform_linear(count: usize, spacing: f64, pattern: AntennaPattern) -> Self {
        let centre = (count as f64 - 1.0) / 2.0;
        AntennaArray {
            elements: (0..count)
                .map(|i| Vec3::new((i as f64 - centre) * spacing, 0.0, 0.0))
                .collect(),
            pattern,
            hpbw: default_hpbw(),
        }
    }

    pub fn single(pattern: AntennaPattern) -> Self {
        AntennaArray::uniform_linear(1, 0.0, pattern)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Pattern for a world-frame direction seen by an array with orientation
    /// `rotation` (local to world).
    pub fn field(&self, world_dir: &Vec3, rotation: &Mat3) -> (f64, f64) {
        self.pattern.field(&(rotation.transpose() * world_dir))
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::config(format!("{field}.elements"), "at least one element is required"));
        }
        if self.elements.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::config(format!("{field}.elements"), "offsets must be finite"));
        }
        if self.hpbw.iter().any(|h| !(*h >= 0.0) || !h.is_finite()) {
            return Err(Error::config(format!("{field}.hpbw"), "beam widths must be finite and >= 0"));
        }
        if let AntennaPattern::Table(t) = &self.pattern {
            t.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::rotation::{angle_unit_vector, posture_matrix};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn table() -> PatternTable {
        PatternTable {
            azimuths: vec![0.0, FRAC_PI_2, PI, 1.5 * PI],
            elevations: vec![-FRAC_PI_2, 0.0, FRAC_PI_2],
            vertical: vec![vec![0.0; 4], vec![1.0, 0.5, 0.2, 0.5], vec![0.0; 4]],
            horizontal: vec![vec![0.1; 4], vec![0.0, 0.3, 0.0, 0.3], vec![0.1; 4]],
        }
    }

    #[test]
    fn dipole_peaks_on_horizon_and_nulls_on_axis() {
        let p = AntennaPattern::Dipole;
        assert!((p.field(&Vec3::x()).0 - 1.0).abs() < 1e-15);
        assert_eq!(p.field(&Vec3::z()).0, 0.0);
        assert_eq!(p.field(&-Vec3::z()).0, 0.0);
    }

    #[test]
    fn table_hits_grid_points_and_wraps() {
        let p = AntennaPattern::Table(table());
        let (v, h) = p.field(&Vec3::y());
        assert!((v - 0.5).abs() < 1e-12 && (h - 0.3).abs() < 1e-12);
        // halfway between 3pi/2 and 2pi wraps onto the first column
        let dir = angle_unit_vector(1.75 * PI, 0.0).unwrap();
        let (v, _) = p.field(&dir);
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_applied_to_direction() {
        let arr = AntennaArray::single(AntennaPattern::Dipole);
        // rolling by pi/2 lays the dipole along world -y, so +y becomes a null
        let r = posture_matrix(FRAC_PI_2, 0.0, 0.0);
        let (v, _) = arr.field(&Vec3::y(), &r);
        assert!(v.abs() < 1e-7);
        let (v, _) = arr.field(&Vec3::x(), &r);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ula_is_centred() {
        let arr = AntennaArray::uniform_linear(2, 0.0625, AntennaPattern::Isotropic);
        assert_eq!(arr.elements[0], Vec3::new(-0.03125, 0.0, 0.0));
        assert_eq!(arr.elements[1], Vec3::new(0.03125, 0.0, 0.0));
        assert!(arr.validate("tx.array").is_ok());
    }

    #[test]
    fn empty_array_is_rejected() {
        let mut arr = AntennaArray::single(AntennaPattern::Isotropic);
        arr.elements.clear();
        assert!(arr.validate("tx.array").is_err());
    }

    proptest! {
        #[test]
        fn pattern_power_bounded_by_max_gain(a in -7.0f64..7.0, b in -FRAC_PI_2..FRAC_PI_2) {
            let dir = angle_unit_vector(a, b).unwrap();
            for p in [AntennaPattern::Isotropic, AntennaPattern::Dipole, AntennaPattern::Table(table())] {
                let (v, h) = p.field(&dir);
                prop_assert!(v * v + h * h <= p.max_gain() + 1e-12);
            }
        }
    }
}
