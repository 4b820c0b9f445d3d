//! Scenario configuration file (TOML).
//!
//! Every section except `schema_version` is optional; omitted values fall
//! back to the bundled UAV-to-ground scenario: a UAV at 150 m flying a 100 m
//! radius arc at 30 m/s over a vehicle driving at 20 m/s, 2.4 GHz carrier,
//! 2x2 dipole arrays.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::antenna::{AntennaArray, AntennaPattern};
use super::posture::PostureTrack;
use super::rotation::Vec3;
use super::trajectory::{TrajectoryTrack, VelocityProfile};
use crate::error::{Error, Result};
use crate::fse::FuselageScatterSet;
use crate::largescale::{NgsCorpusConfig, ShadowFadingParams, TrainingConfig};
use crate::smallscale::SmallScaleParams;
use crate::stats::report::StatsConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalConfig {
    pub trajectory: TrajectoryTrack,
    #[serde(default)]
    pub posture: PostureTrack,
    pub array: AntennaArray,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuselageConfig {
    pub enabled: bool,
    /// Scatterer set; the built-in hexacopter frame when absent.
    pub scatterers: Option<FuselageScatterSet>,
    /// Ray-tracer table replacing the scatterer set.
    pub ray_table: Option<PathBuf>,
}

impl Default for FuselageConfig {
    fn default() -> Self {
        FuselageConfig {
            enabled: true,
            scatterers: None,
            ray_table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LargeScaleConfig {
    pub enabled: bool,
    pub shadow_fading: ShadowFadingParams,
    /// Built-in synthetic corpus, used unless `corpus_path` or `model_path` is set.
    pub corpus: NgsCorpusConfig,
    pub corpus_path: Option<PathBuf>,
    /// Pre-trained near-ground network; skips training.
    pub model_path: Option<PathBuf>,
    pub training: TrainingConfig,
}

impl Default for LargeScaleConfig {
    fn default() -> Self {
        LargeScaleConfig {
            enabled: true,
            shadow_fading: ShadowFadingParams::default(),
            corpus: NgsCorpusConfig::default(),
            corpus_path: None,
            model_path: None,
            training: TrainingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Write every n-th sample to the CIR file.
    pub cir_decimation: usize,
    /// Also write `cir.bin`.
    pub cir_binary: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            cir_decimation: 100,
            cir_binary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_fc")]
    pub carrier_frequency_ghz: f64,
    #[serde(default = "default_c")]
    pub wave_speed_m_s: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_xi_nus")]
    pub xi_nus_m: f64,
    #[serde(default = "default_xi_ngs")]
    pub xi_ngs_m: f64,
    #[serde(default = "default_tx")]
    pub tx: TerminalConfig,
    #[serde(default = "default_rx")]
    pub rx: TerminalConfig,
    #[serde(default)]
    pub small_scale: SmallScaleParams,
    #[serde(default)]
    pub fuselage: FuselageConfig,
    #[serde(default)]
    pub large_scale: LargeScaleConfig,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    1
}
fn default_fc() -> f64 {
    2.4
}
fn default_c() -> f64 {
    SPEED_OF_LIGHT
}
fn default_duration() -> f64 {
    10.0
}
fn default_rate() -> f64 {
    1000.0
}
fn default_xi_nus() -> f64 {
    50.0
}
fn default_xi_ngs() -> f64 {
    15.0
}

/// Two dipoles half a wavelength apart at the default carrier.
fn default_array() -> AntennaArray {
    AntennaArray::uniform_linear(2, SPEED_OF_LIGHT / (default_fc() * 1e9) / 2.0, AntennaPattern::Dipole)
}

fn default_tx() -> TerminalConfig {
    TerminalConfig {
        trajectory: TrajectoryTrack {
            initial_position: Vec3::new(100.0, 0.0, 150.0),
            velocity: VelocityProfile::CircularArc {
                radius: 100.0,
                angular_rate: 0.3,
                initial_phase: 0.0,
                vertical_speed: 0.0,
            },
            t0: 0.0,
        },
        posture: PostureTrack::level(),
        array: default_array(),
    }
}

fn default_rx() -> TerminalConfig {
    TerminalConfig {
        trajectory: TrajectoryTrack {
            initial_position: Vec3::new(0.0, -100.0, 1.5),
            velocity: VelocityProfile::Constant {
                velocity: Vec3::new(0.0, 20.0, 0.0),
            },
            t0: 0.0,
        },
        posture: PostureTrack::level(),
        array: default_array(),
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            seed: default_seed(),
            carrier_frequency_ghz: default_fc(),
            wave_speed_m_s: default_c(),
            duration_s: default_duration(),
            sample_rate_hz: default_rate(),
            xi_nus_m: default_xi_nus(),
            xi_ngs_m: default_xi_ngs(),
            tx: default_tx(),
            rx: default_rx(),
            small_scale: SmallScaleParams::default(),
            fuselage: FuselageConfig::default(),
            large_scale: LargeScaleConfig::default(),
            stats: StatsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_default();
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = ScenarioConfig::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        for p in [
            &mut self.fuselage.ray_table,
            &mut self.large_scale.corpus_path,
            &mut self.large_scale.model_path,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn wavelength(&self) -> f64 {
        self.wave_speed_m_s / (self.carrier_frequency_ghz * 1e9)
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize + 1
    }

    pub fn sample_time(&self, index: usize) -> f64 {
        index as f64 / self.sample_rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let positive = [
            ("carrier_frequency_ghz", self.carrier_frequency_ghz),
            ("wave_speed_m_s", self.wave_speed_m_s),
            ("duration_s", self.duration_s),
            ("sample_rate_hz", self.sample_rate_hz),
            ("xi_nus_m", self.xi_nus_m),
            ("xi_ngs_m", self.xi_ngs_m),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, "must be positive and finite"));
            }
        }
        let h = self.tx.trajectory.initial_position.z;
        if !(self.xi_ngs_m < h - self.xi_nus_m) {
            return Err(Error::config(
                "xi_ngs_m",
                format!(
                    "need xi_ngs < UAV height - xi_nus ({} < {h} - {})",
                    self.xi_ngs_m, self.xi_nus_m
                ),
            ));
        }
        for (name, t) in [("tx", &self.tx), ("rx", &self.rx)] {
            t.trajectory
                .validate()
                .map_err(|e| prefix(e, &format!("{name}.trajectory")))?;
            t.posture.validate().map_err(|e| prefix(e, name))?;
            t.array.validate(&format!("{name}.array"))?;
        }
        if self.tx.array.hpbw.iter().any(|h| *h > std::f64::consts::PI) {
            return Err(Error::config("tx.array.hpbw", "beam-width projections must not exceed pi"));
        }
        self.small_scale.validate()?;
        if let Some(set) = &self.fuselage.scatterers {
            set.validate()?;
        }
        self.large_scale.shadow_fading.validate().map_err(|e| prefix(e, "large_scale.shadow_fading"))?;
        self.large_scale.corpus.validate()?;
        self.large_scale.training.validate()?;
        self.stats.validate()?;
        let [p, q] = self.stats.pair;
        if p >= self.tx.array.len() || q >= self.rx.array.len() {
            return Err(Error::config("stats.pair", "element index out of range"));
        }
        if self.output.cir_decimation == 0 {
            return Err(Error::config("output.cir_decimation", "must be at least 1"));
        }
        Ok(())
    }
}

fn prefix(e: Error, section: &str) -> Error {
    match e {
        Error::Config { field, msg } => Error::config(format!("{section}.{field}"), msg),
        Error::Domain { msg, .. } => Error::config(section.to_string(), msg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gives_defaults() {
        let cfg = ScenarioConfig::from_toml("schema_version = 1\n").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.sample_count(), 10_001);
        assert!((cfg.tx.array.elements[1].x * 4.0 - cfg.wavelength()).abs() < 1e-15);
    }

    #[test]
    fn schema_version_is_required_and_checked() {
        assert!(ScenarioConfig::from_toml("seed = 3\n").is_err());
        assert!(ScenarioConfig::from_toml("schema_version = 2\n").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_toml("schema_version = 1\nsead = 3\n").unwrap_err();
        assert!(err.to_string().contains("sead"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = ScenarioConfig::from_toml("schema_version = 1\nduration_s = 0\n").unwrap_err();
        assert!(err.to_string().contains("duration_s"));
        let err = ScenarioConfig::from_toml("schema_version = 1\nxi_ngs_m = 120\n").unwrap_err();
        assert!(err.to_string().contains("xi_ngs_m"));
        let err = ScenarioConfig::from_toml("schema_version = 1\n[small_scale]\nsubpaths = 0\n").unwrap_err();
        assert!(err.to_string().contains("small_scale.subpaths"));
    }

    #[test]
    fn text_round_trip() {
        let cfg = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn relative_paths_resolve_against_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(&path, "schema_version = 1\n[large_scale]\nmodel_path = \"m.txt\"\n").unwrap();
        let cfg = ScenarioConfig::load(&path).unwrap();
        assert_eq!(cfg.large_scale.model_path.unwrap(), dir.path().join("m.txt"));
    }
}
