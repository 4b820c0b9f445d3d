//! End-to-end run: build the model, generate the channel, compute statistics
//! and write artifacts with a manifest.
//!
//! Per time sample the large-scale losses are evaluated before the
//! small-scale taps are assembled.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fse::{load_source, FseSource, FuselageScatterSet, NusModel};
use crate::largescale::corpus::load_corpus;
use crate::largescale::{generate_ngs_corpus, train_mlp, BreakpointCache, MlpModel, SegmentedPathLoss};
use crate::scenario::ScenarioConfig;
use crate::smallscale::export::{write_cir_binary, write_cir_csv, write_cir_header};
use crate::smallscale::{at_sample, ChannelModel, ChannelSetup, LargeScaleModel, Realization, Terminal};
use crate::stats::report::{AcfResult, LevelCrossingResult, Metric, PdpResult, SiResult, StatsReport};
use crate::stats::{averaged_pdps, lcr, afd, stationary_interval, temporal_acf, EnvelopeSeries, Pdp};

/// Which artifacts to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub cir: bool,
    pub pl: bool,
    pub stats: bool,
}

impl Emit {
    pub const ALL: Emit = Emit {
        cir: true,
        pl: true,
        stats: true,
    };
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub emit: Emit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Vec<(String, String)>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ngs_validation_rmse_db: Option<f64>,
    pub files: Vec<FileEntry>,
    pub wall_clock_s: f64,
}

/// Near-ground network from the configured model file, corpus file or the
/// built-in corpus generator.
pub fn near_ground_model(cfg: &ScenarioConfig) -> Result<MlpModel> {
    let ls = &cfg.large_scale;
    if let Some(path) = &ls.model_path {
        return MlpModel::load(path);
    }
    let samples = match &ls.corpus_path {
        Some(path) => load_corpus(path)?,
        None => generate_ngs_corpus(&ls.corpus, cfg.carrier_frequency_ghz)?,
    };
    train_mlp(&samples, &ls.training)
}

/// Builds the channel model; `ngs` is required when large-scale fading is on.
pub fn build_model(cfg: &ScenarioConfig, ngs: Option<MlpModel>) -> Result<ChannelModel> {
    let wavelength = cfg.wavelength();
    let fuselage = if cfg.fuselage.enabled {
        let source = load_source(cfg.fuselage.scatterers.as_ref(), cfg.fuselage.ray_table.as_deref(), wavelength)?;
        Some(NusModel::with_free_space_reference(source, wavelength))
    } else {
        None
    };
    let large_scale = if cfg.large_scale.enabled {
        // without an airframe the near-UAV loss reduces to the direct ray
        let nus = fuselage.clone().unwrap_or_else(|| {
            NusModel::with_free_space_reference(
                FseSource::Scatterers(FuselageScatterSet {
                    scatterers: Vec::new(),
                    ..FuselageScatterSet::hexacopter()
                }),
                wavelength,
            )
        });
        Some(LargeScaleModel {
            pathloss: SegmentedPathLoss {
                fc_ghz: cfg.carrier_frequency_ghz,
                xi_nus: cfg.xi_nus_m,
                xi_ngs: cfg.xi_ngs_m,
                nus,
                ngs: Some(ngs.ok_or_else(|| Error::config("large_scale", "a near-ground model is required"))?),
            },
            shadow: cfg.large_scale.shadow_fading,
        })
    } else {
        None
    };
    let terminal = |t: &crate::scenario::TerminalConfig| Terminal {
        trajectory: t.trajectory.clone(),
        posture: t.posture.clone(),
        array: t.array.clone(),
    };
    ChannelModel::new(ChannelSetup {
        carrier_frequency_ghz: cfg.carrier_frequency_ghz,
        wave_speed: cfg.wave_speed_m_s,
        duration: cfg.duration_s,
        xi_nus: cfg.xi_nus_m,
        xi_ngs: cfg.xi_ngs_m,
        tx: terminal(&cfg.tx),
        rx: terminal(&cfg.rx),
        small_scale: cfg.small_scale.clone(),
        fuselage,
        large_scale,
    })
}

/// Seed of ensemble member `i`; member 0 is the run itself.
pub fn ensemble_seed(seed: u64, member: usize) -> u64 {
    seed.wrapping_add(member as u64)
}

/// Statistics of element pair `cfg.stats.pair` for the selected metrics.
pub fn compute_stats(model: &ChannelModel, cfg: &ScenarioConfig, real: &Realization) -> Result<StatsReport> {
    let sc = &cfg.stats;
    let [p, q] = sc.pair;
    let fs = cfg.sample_rate_hz;
    let samples = cfg.sample_count();
    let mut report = StatsReport {
        seed: real.seed,
        pair: sc.pair,
        ..StatsReport::default()
    };
    let wants = |m: Metric| sc.metrics.contains(&m);

    if wants(Metric::Acf) {
        let reference = (sc.acf_reference_s * fs).round() as usize;
        let max_lag = (sc.acf_max_lag_s * fs).round() as usize;
        if reference + max_lag >= samples {
            return Err(Error::config("stats.acf_reference_s", "reference time plus lag span exceeds the duration"));
        }
        let times: Vec<f64> = (reference..=reference + max_lag).map(|k| cfg.sample_time(k)).collect();
        let members = (0..sc.ensemble)
            .into_par_iter()
            .map(|i| {
                let member = if i == 0 {
                    real.clone()
                } else {
                    model.realize(ensemble_seed(real.seed, i))?
                };
                model.narrowband(&member, &times, p, q)
            })
            .collect::<Result<Vec<_>>>()?;
        let lags: Vec<isize> = (0..=max_lag as isize).collect();
        let r = temporal_acf(&members, 0, &lags)?;
        report.acf = Some(AcfResult {
            reference_s: times[0],
            ensemble: sc.ensemble,
            lags_s: lags.iter().map(|&l| l as f64 / fs).collect(),
            re: r.iter().map(|c| c.re).collect(),
            im: r.iter().map(|c| c.im).collect(),
        });
    }

    if wants(Metric::Pdp) || wants(Metric::Si) {
        let drops = pdp_drops(model, real, cfg)?;
        if wants(Metric::Pdp) {
            report.pdp = Some(PdpResult::from_average(&Pdp::average(&drops)?, drops.len()));
        }
        if wants(Metric::Si) {
            let averaged = averaged_pdps(&drops, sc.pdp_average_count)?;
            let spacing = sc.pdp_average_count as f64 * sc.pdp_drop_interval_s;
            let si = stationary_interval(&averaged, spacing, sc.si_threshold)?;
            report.si = Some(SiResult::new(sc.si_threshold, spacing, &si));
        }
    }

    if wants(Metric::LcrAfd) {
        let times: Vec<f64> = (0..samples).map(|k| cfg.sample_time(k)).collect();
        let h: Vec<_> = model.narrowband(real, &times, p, q)?.into_iter().map(|(l, n)| l + n).collect();
        let env = EnvelopeSeries::from_complex(1.0 / fs, &h)?;
        let rms = env.rms();
        if !(rms > 0.0) {
            return Err(Error::PowerUnderflow);
        }
        let mut rates = Vec::new();
        let mut fades = Vec::new();
        for r in &sc.lcr_levels_rel {
            rates.push(lcr(&env, r * rms)?);
            fades.push(afd(&env, r * rms)?);
        }
        report.lcr_afd = Some(LevelCrossingResult {
            rms,
            levels_rel: sc.lcr_levels_rel.clone(),
            lcr_hz: rates,
            afd_s: fades,
        });
    }
    Ok(report)
}

/// PDPs of the analysed pair at every drop time.
pub fn pdp_drops(model: &ChannelModel, real: &Realization, cfg: &ScenarioConfig) -> Result<Vec<Pdp>> {
    let sc = &cfg.stats;
    let count = (cfg.duration_s / sc.pdp_drop_interval_s + 1e-9).floor() as usize + 1;
    let pair = [(sc.pair[0], sc.pair[1])];
    (0..count)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * sc.pdp_drop_interval_s;
            let frame = model.frame(real, t, Some(&pair), None).map_err(|e| at_sample(k, t, e))?;
            Pdp::from_taps(&frame.pairs[0].taps, sc.pdp_resolution_s, sc.pdp_include_los)
        })
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_pl_profile(model: &ChannelModel, real: &Realization, cfg: &ScenarioConfig, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t_s,distance_m,los_pl_db,nlos_pl_db,nlos_branch,shadow_db,extrapolated,pvf,rice_factor_db")?;
    let mut cache = BreakpointCache::default();
    for k in 0..cfg.sample_count() {
        let t = cfg.sample_time(k);
        let state = model.link_state(t).map_err(|e| at_sample(k, t, e))?;
        let large = model
            .large_scale(real, &state, Some(&mut cache))
            .map_err(|e| at_sample(k, t, e))?;
        let distance = (state.rx - state.tx).norm();
        let k_db = fmt(10.0 * state.rice_factor.log10());
        match large {
            Some(l) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                fmt(t),
                fmt(distance),
                fmt(l.los_pl_db),
                fmt(l.nlos_pl_db),
                l.nlos_branch.name(),
                fmt(l.shadow_db),
                l.extrapolated,
                fmt(state.pvf),
                k_db
            )?,
            None => writeln!(w, "{},{},,,,,,{},{}", fmt(t), fmt(distance), fmt(state.pvf), k_db)?,
        }
    }
    w.flush()?;
    Ok(())
}

fn write_cir(model: &ChannelModel, real: &Realization, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join("cir.csv");
    let bin_path = dir.join("cir.bin");
    let mut csv = create(&csv_path)?;
    let mut bin = if cfg.output.cir_binary {
        Some(create(&bin_path)?)
    } else {
        None
    };
    write_cir_header(&mut csv)?;
    let indices: Vec<usize> = (0..cfg.sample_count()).step_by(cfg.output.cir_decimation).collect();
    for chunk in indices.chunks(64) {
        let frames = chunk
            .par_iter()
            .map(|&k| {
                let t = cfg.sample_time(k);
                model.frame(real, t, None, None).map_err(|e| at_sample(k, t, e))
            })
            .collect::<Result<Vec<_>>>()?;
        for f in &frames {
            write_cir_csv(&mut csv, f)?;
            if let Some(b) = bin.as_mut() {
                write_cir_binary(b, f)?;
            }
        }
    }
    csv.flush()?;
    let mut written = vec![csv_path];
    if let Some(mut b) = bin {
        b.flush()?;
        written.push(bin_path);
    }
    Ok(written)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the configured scenario and writes the selected artifacts.
pub fn run_simulation(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunManifest> {
    let started = Instant::now();
    cfg.validate()?;
    if opts.emit.stats && cfg.stats.metrics.is_empty() {
        return Err(Error::config(
            "stats.metrics",
            format!("no metrics selected; valid names: {}", Metric::valid_names()),
        ));
    }
    let dir = &opts.output_dir;
    std::fs::create_dir_all(dir)?;

    let ngs = if cfg.large_scale.enabled {
        Some(near_ground_model(cfg)?)
    } else {
        None
    };
    let ngs_rmse = ngs.as_ref().map(|m| m.validation_rmse_db);
    let model = build_model(cfg, ngs)?;
    let real = model.realize(cfg.seed)?;

    let mut written: Vec<PathBuf> = Vec::new();
    if opts.emit.pl {
        let path = dir.join("pl_profile.csv");
        write_pl_profile(&model, &real, cfg, &path)?;
        written.push(path);
    }
    if opts.emit.cir {
        written.extend(write_cir(&model, &real, cfg, dir)?);
    }
    if opts.emit.stats {
        let report = compute_stats(&model, cfg, &real)?;
        let stats_dir = dir.join("stats");
        let mut emit = |name: &str, text: String| -> Result<()> {
            let path = stats_dir.join(name);
            write_text(&path, &text)?;
            written.push(path);
            Ok(())
        };
        if let Some(a) = &report.acf {
            emit("acf.csv", a.to_csv())?;
        }
        if let Some(p) = &report.pdp {
            emit("pdp.csv", p.to_csv())?;
        }
        if let Some(l) = &report.lcr_afd {
            emit("lcr_afd.csv", l.to_csv())?;
        }
        if let Some(s) = &report.si {
            emit("si.csv", s.to_csv())?;
        }
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
        emit("report.json", json + "\n")?;
    }

    let mut files = Vec::with_capacity(written.len());
    for path in &written {
        let bytes = std::fs::read(path)?;
        files.push(FileEntry {
            path: path
                .strip_prefix(dir)
                .unwrap_or(path)
                .to_string_lossy()
                .replace('\\', "/"),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = RunManifest {
        config_sha256: sha256_hex(cfg.to_toml()?.as_bytes()),
        seed: cfg.seed,
        versions: vec![(env!("CARGO_PKG_NAME").to_string(), env!("CARGO_PKG_VERSION").to_string())],
        samples: cfg.sample_count(),
        ngs_validation_rmse_db: ngs_rmse,
        files,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(&dir.join("manifest.json"), &(json + "\n"))?;
    Ok(manifest)
}
