//! Training corpus for the near-ground network.
//!
//! The built-in generator is synthetic: free-space loss, an extra distance
//! exponent for near-ground clutter, an elevation-dependent excess, a weak
//! azimuth ripple and Gaussian clutter in dB. Imported ray-tracer output can
//! replace it through [`parse_corpus`].

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::PlSample;
use super::pathloss::fsl_path_loss;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NgsCorpusConfig {
    pub samples: usize,
    pub distance_range_m: [f64; 2],
    pub elevation_range_rad: [f64; 2],
    /// Additional distance exponent on top of free space (dB per decade / 10).
    pub extra_exponent: f64,
    /// Excess loss at grazing elevation, fading to zero overhead (dB).
    pub grazing_excess_db: f64,
    pub azimuth_ripple_db: f64,
    pub clutter_std_db: f64,
    pub seed: u64,
}

impl Default for NgsCorpusConfig {
    fn default() -> Self {
        NgsCorpusConfig {
            samples: 600,
            distance_range_m: [100.0, 450.0],
            elevation_range_rad: [0.2, FRAC_PI_2],
            extra_exponent: 1.5,
            grazing_excess_db: 6.0,
            azimuth_ripple_db: 1.0,
            clutter_std_db: 1.0,
            seed: 1,
        }
    }
}

impl NgsCorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let [d0, d1] = self.distance_range_m;
        if !(d0 > 0.0 && d1 > d0) {
            return Err(Error::config("ngs.corpus.distance_range_m", "need 0 < min < max"));
        }
        let [e0, e1] = self.elevation_range_rad;
        if !(e0 >= -FRAC_PI_2 && e1 > e0 && e1 <= FRAC_PI_2) {
            return Err(Error::config(
                "ngs.corpus.elevation_range_rad",
                "need -pi/2 <= min < max <= pi/2",
            ));
        }
        if !(self.clutter_std_db >= 0.0) {
            return Err(Error::config("ngs.corpus.clutter_std_db", "must be >= 0"));
        }
        if ![self.extra_exponent, self.grazing_excess_db, self.azimuth_ripple_db]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::config("ngs.corpus", "model coefficients must be finite"));
        }
        Ok(())
    }

    /// Noise-free generator value.
    pub fn mean_pl_db(&self, fc_ghz: f64, distance: f64, azimuth: f64, elevation: f64) -> Result<f64> {
        Ok(fsl_path_loss(distance, fc_ghz)?
            + 10.0 * self.extra_exponent * (distance / self.distance_range_m[0]).log10()
            + self.grazing_excess_db * (1.0 - elevation.sin())
            + self.azimuth_ripple_db * azimuth.cos())
    }
}

pub fn generate_ngs_corpus(cfg: &NgsCorpusConfig, fc_ghz: f64) -> Result<Vec<PlSample>> {
    cfg.validate()?;
    let mut rng = crate::rng::substream(cfg.seed, crate::rng::TRAINING_STREAM + 1);
    let clutter = Normal::new(0.0, cfg.clutter_std_db).map_err(|e| Error::config("ngs.corpus.clutter_std_db", e.to_string()))?;
    let [d0, d1] = cfg.distance_range_m;
    let [e0, e1] = cfg.elevation_range_rad;
    (0..cfg.samples)
        .map(|_| {
            let distance = rng.random_range(d0..d1);
            let azimuth = rng.random_range(0.0..TAU);
            let elevation = rng.random_range(e0..e1);
            let pl_db = cfg.mean_pl_db(fc_ghz, distance, azimuth, elevation)? + clutter.sample(&mut rng);
            Ok(PlSample {
                distance,
                azimuth,
                elevation,
                pl_db,
            })
        })
        .collect()
}

/// Comma-separated `d_m,alpha_rad,beta_rad,pl_db` with a header line.
pub fn parse_corpus(text: &str) -> Result<Vec<PlSample>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("corpus is empty".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["d_m", "alpha_rad", "beta_rad", "pl_db"] {
        return Err(Error::Parse(format!("corpus header must be `d_m,alpha_rad,beta_rad,pl_db`, got `{header}`")));
    }
    lines
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
                .collect::<Result<_>>()?;
            if v.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 columns", i + 1)));
            }
            Ok(PlSample {
                distance: v[0],
                azimuth: v[1],
                elevation: v[2],
                pl_db: v[3],
            })
        })
        .collect()
}

pub fn corpus_to_text(samples: &[PlSample]) -> String {
    let mut s = String::from("d_m,alpha_rad,beta_rad,pl_db\n");
    for p in samples {
        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", p.distance, p.azimuth, p.elevation, p.pl_db);
    }
    s
}

pub fn load_corpus(path: &Path) -> Result<Vec<PlSample>> {
    parse_corpus(&std::fs::read_to_string(path)?)
}
