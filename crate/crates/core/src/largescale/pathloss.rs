//! Free-space and three-segment path loss.
//!
//! Along the straight line from the aerial antenna to the ground terminal the
//! loss is taken from the fuselage ray sum while the observation point is
//! within `xi_nus` below the antenna, from free space in the middle, and from
//! the near-ground network below height `xi_ngs`. Offsets `c1`, `c2` make the
//! three pieces meet at the break points.

use serde::{Deserialize, Serialize};

use super::mlp::MlpModel;
use crate::error::{Error, Result};
use crate::fse::NusModel;
use crate::scenario::rotation::{vector_angles, Mat3, Vec3};

/// Constant of the free-space formula with `d` in metres and `fc` in GHz.
pub const FSL_CONSTANT_DB: f64 = 32.4;

/// `20 log10 d + 20 log10 fc + 32.4` with `d` in m, `fc` in GHz.
pub fn fsl_path_loss(distance: f64, fc_ghz: f64) -> Result<f64> {
    if !(distance > 0.0) || !(fc_ghz > 0.0) {
        return Err(Error::domain(
            "fsl_path_loss",
            format!("distance ({distance}) and frequency ({fc_ghz}) must be positive"),
        ));
    }
    Ok(20.0 * distance.log10() + 20.0 * fc_ghz.log10() + FSL_CONSTANT_DB)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlBranch {
    Nus,
    Fsl,
    Ngs,
}

impl PlBranch {
    pub fn name(&self) -> &'static str {
        match self {
            PlBranch::Nus => "nus",
            PlBranch::Fsl => "fsl",
            PlBranch::Ngs => "ngs",
        }
    }
}

/// Antenna and ground-terminal positions plus the airframe attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub tx: Vec3,
    pub rx: Vec3,
    pub posture: Mat3,
}

impl LinkGeometry {
    pub fn distance(&self) -> f64 {
        (self.rx - self.tx).norm()
    }

    /// Unit vector from the antenna toward the ground terminal.
    pub fn direction(&self) -> Result<Vec3> {
        let d = self.rx - self.tx;
        let n = d.norm();
        if n == 0.0 {
            return Err(Error::degenerate("link_geometry", "terminals coincide"));
        }
        Ok(d / n)
    }

    /// Sine of the elevation of the antenna seen from the ground terminal.
    pub fn sin_elevation(&self) -> Result<f64> {
        let s = -self.direction()?.z;
        if !(s > 0.0) {
            return Err(Error::degenerate(
                "link_geometry",
                "the aerial terminal must be above the ground terminal",
            ));
        }
        Ok(s)
    }

    /// Azimuth and elevation of the antenna seen from the ground terminal.
    pub fn arrival_angles(&self) -> Result<(f64, f64)> {
        vector_angles(&(self.tx - self.rx)).ok_or_else(|| Error::degenerate("link_geometry", "terminals coincide"))
    }

    /// Height above ground of the point at distance `d` from the antenna.
    pub fn height_at(&self, d: f64) -> Result<f64> {
        Ok(self.tx.z + self.direction()?.z * d)
    }
}

/// Break points (distances from the antenna) and continuity offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlBreakpoints {
    /// End of the near-UAV segment.
    pub d1: f64,
    /// Start of the near-ground segment.
    pub d2: f64,
    pub c1: f64,
    /// `None` when no near-ground model is loaded.
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlValue {
    pub pl_db: f64,
    pub branch: PlBranch,
    /// The near-ground network was queried outside its training range.
    pub extrapolated: bool,
}

#[derive(Debug, Clone)]
pub struct SegmentedPathLoss {
    pub fc_ghz: f64,
    pub xi_nus: f64,
    pub xi_ngs: f64,
    pub nus: NusModel,
    pub ngs: Option<MlpModel>,
}

impl SegmentedPathLoss {
    /// Break-point distances only, without solving the offsets.
    pub fn breakpoint_distances(&self, g: &LinkGeometry) -> Result<(f64, f64)> {
        let s = g.sin_elevation()?;
        let d1 = self.xi_nus / s;
        let d2 = (g.tx.z - self.xi_ngs) / s;
        if !(d2 > d1) {
            return Err(Error::degenerate(
                "segmented_pl",
                format!("antenna height {} leaves no free-space segment", g.tx.z),
            ));
        }
        Ok((d1, d2))
    }

    pub fn breakpoints(&self, g: &LinkGeometry) -> Result<PlBreakpoints> {
        let (d1, d2) = self.breakpoint_distances(g)?;
        let u = g.direction()?;
        let nus = self.nus.path_loss(&g.tx, &g.posture, &(g.tx + u * d1))?;
        if nus.cancelled {
            return Err(Error::degenerate("segmented_pl", "fuselage rays cancel at the first break point"));
        }
        let c1 = nus.pl_db - 20.0 * d1.log10() - 20.0 * self.fc_ghz.log10();
        let c2 = match &self.ngs {
            Some(model) => {
                let (az, el) = g.arrival_angles()?;
                let fsl = 20.0 * d2.log10() + 20.0 * self.fc_ghz.log10() + c1;
                Some(fsl - model.predict(d2, az, el).pl_db)
            }
            None => None,
        };
        Ok(PlBreakpoints { d1, d2, c1, c2 })
    }

    /// Branch selected by the height of the point at distance `d`.
    pub fn branch_at(&self, g: &LinkGeometry, d: f64) -> Result<PlBranch> {
        let h = g.height_at(d)?;
        Ok(if h >= g.tx.z - self.xi_nus {
            PlBranch::Nus
        } else if h >= self.xi_ngs {
            PlBranch::Fsl
        } else {
            PlBranch::Ngs
        })
    }

    /// Value of a given branch at distance `d`, regardless of which branch
    /// owns that distance.
    pub fn branch_pl(&self, branch: PlBranch, g: &LinkGeometry, bp: &PlBreakpoints, d: f64) -> Result<PlValue> {
        if !(d > 0.0) {
            return Err(Error::domain("segmented_pl", "distance must be positive"));
        }
        let (pl_db, extrapolated) = match branch {
            PlBranch::Nus => {
                let u = g.direction()?;
                let nus = self.nus.path_loss(&g.tx, &g.posture, &(g.tx + u * d))?;
                (nus.pl_db, false)
            }
            PlBranch::Fsl => (20.0 * d.log10() + 20.0 * self.fc_ghz.log10() + bp.c1, false),
            PlBranch::Ngs => {
                let (model, c2) = match (&self.ngs, bp.c2) {
                    (Some(m), Some(c2)) => (m, c2),
                    _ => return Err(Error::config("ngs", "near-ground path loss needs a trained model")),
                };
                let (az, el) = g.arrival_angles()?;
                let p = model.predict(d, az, el);
                (p.pl_db + c2, p.extrapolated)
            }
        };
        Ok(PlValue {
            pl_db,
            branch,
            extrapolated,
        })
    }

    /// Three-segment path loss at distance `d` from the antenna along the link.
    pub fn segmented_pl(&self, g: &LinkGeometry, bp: &PlBreakpoints, d: f64) -> Result<PlValue> {
        let depth = g.distance();
        if d > depth * (1.0 + 1e-12) {
            return Err(Error::domain("segmented_pl", "distance runs past the ground terminal"));
        }
        self.branch_pl(self.branch_at(g, d)?, g, bp, d)
    }
}

/// Re-solves the continuity offsets only when a break point has moved by
/// more than `tolerance` metres.
#[derive(Debug, Clone)]
pub struct BreakpointCache {
    pub tolerance: f64,
    current: Option<PlBreakpoints>,
    solves: usize,
}

impl Default for BreakpointCache {
    fn default() -> Self {
        BreakpointCache {
            tolerance: 0.1,
            current: None,
            solves: 0,
        }
    }
}

impl BreakpointCache {
    pub fn get(&mut self, model: &SegmentedPathLoss, g: &LinkGeometry) -> Result<PlBreakpoints> {
        let (d1, d2) = model.breakpoint_distances(g)?;
        if let Some(bp) = self.current {
            if (bp.d1 - d1).abs() <= self.tolerance && (bp.d2 - d2).abs() <= self.tolerance {
                return Ok(bp);
            }
        }
        let bp = model.breakpoints(g)?;
        self.current = Some(bp);
        self.solves += 1;
        Ok(bp)
    }

    /// Number of full solves so far.
    pub fn solves(&self) -> usize {
        self.solves
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fse::{FseSource, FuselageScatterSet};

    fn model() -> SegmentedPathLoss {
        SegmentedPathLoss {
            fc_ghz: 2.4,
            xi_nus: 50.0,
            xi_ngs: 15.0,
            nus: NusModel::with_free_space_reference(
                FseSource::Scatterers(FuselageScatterSet::hexacopter()),
                299_792_458.0 / 2.4e9,
            ),
            ngs: None,
        }
    }

    fn geometry() -> LinkGeometry {
        LinkGeometry {
            tx: Vec3::new(100.0, 0.0, 150.0),
            rx: Vec3::new(0.0, -100.0, 1.5),
            posture: Mat3::identity(),
        }
    }

    #[test]
    fn fsl_examples() {
        assert!((fsl_path_loss(1.0, 1.0).unwrap() - 32.4).abs() < 1e-12);
        assert!((fsl_path_loss(100.0, 2.4).unwrap() - (72.4 + 20.0 * 2.4f64.log10())).abs() < 1e-12);
        assert!((fsl_path_loss(100.0, 2.4).unwrap() - 80.004).abs() < 1e-3);
        let step = fsl_path_loss(200.0, 5.0).unwrap() - fsl_path_loss(100.0, 5.0).unwrap();
        assert!((step - 6.0206).abs() < 1e-4);
        assert!(fsl_path_loss(0.0, 1.0).is_err());
        assert!(fsl_path_loss(1.0, -1.0).is_err());
    }

    #[test]
    fn fsl_is_increasing() {
        let mut last = f64::NEG_INFINITY;
        for i in 1..100 {
            let v = fsl_path_loss(i as f64 * 3.7, 2.4).unwrap();
            assert!(v > last);
            last = v;
        }
        assert!(fsl_path_loss(10.0, 5.0).unwrap() > fsl_path_loss(10.0, 2.4).unwrap());
    }

    #[test]
    fn continuity_at_first_break_point() {
        let m = model();
        let g = geometry();
        let bp = m.breakpoints(&g).unwrap();
        let a = m.branch_pl(PlBranch::Nus, &g, &bp, bp.d1).unwrap().pl_db;
        let b = m.branch_pl(PlBranch::Fsl, &g, &bp, bp.d1).unwrap().pl_db;
        assert!((a - b).abs() < 1e-9);
        let half = m.branch_pl(PlBranch::Fsl, &g, &bp, 0.5 * (bp.d1 + bp.d2)).unwrap().pl_db
            - m.branch_pl(PlBranch::Fsl, &g, &bp, 0.25 * (bp.d1 + bp.d2)).unwrap().pl_db;
        assert!((half - 6.020599913279624).abs() < 1e-9);
    }

    #[test]
    fn branch_selection_by_height() {
        let m = model();
        let g = geometry();
        let (d1, d2) = m.breakpoint_distances(&g).unwrap();
        assert_eq!(m.branch_at(&g, 0.5 * d1).unwrap(), PlBranch::Nus);
        assert_eq!(m.branch_at(&g, 0.5 * (d1 + d2)).unwrap(), PlBranch::Fsl);
        assert_eq!(m.branch_at(&g, g.distance()).unwrap(), PlBranch::Ngs);
    }

    #[test]
    fn ngs_without_model_is_a_config_error() {
        let m = model();
        let g = geometry();
        let bp = m.breakpoints(&g).unwrap();
        assert!(matches!(m.segmented_pl(&g, &bp, g.distance()), Err(Error::Config { .. })));
    }

    #[test]
    fn ground_level_antenna_is_rejected() {
        let m = model();
        let g = LinkGeometry {
            tx: Vec3::new(0.0, 0.0, 1.0),
            rx: Vec3::new(10.0, 0.0, 1.0),
            posture: Mat3::identity(),
        };
        assert!(m.breakpoints(&g).is_err());
    }

    #[test]
    fn cache_resolves_only_after_movement() {
        let m = model();
        let mut g = geometry();
        let mut cache = BreakpointCache::default();
        cache.get(&m, &g).unwrap();
        g.tx.x += 0.01;
        cache.get(&m, &g).unwrap();
        assert_eq!(cache.solves(), 1);
        g.tx.z += 5.0;
        cache.get(&m, &g).unwrap();
        assert_eq!(cache.solves(), 2);
    }
}
