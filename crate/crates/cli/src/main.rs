//! `u2gsim`: batch front-end for the UAV-to-ground channel simulator.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 runtime
//! geometry or model failure, 4 unwritable output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use u2g_channel::pipeline::{run_simulation, Emit, RunOptions};
use u2g_channel::scenario::ScenarioConfig;
use u2g_channel::stats::report::Metric;
use u2g_channel::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmitArg {
    Cir,
    Pl,
    Stats,
    All,
}

#[derive(Debug, Parser)]
#[command(name = "u2gsim", version, about = "Generate non-stationary UAV-to-ground MIMO channel realisations")]
struct Args {
    /// Scenario file (TOML); the built-in scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Artifacts to write; repeat or comma-separate.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    emit: Vec<EmitArg>,
    /// Metrics to compute, comma-separated (acf, pdp, lcr_afd, si).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    stats: Option<Vec<String>>,
    /// Realisations in ensemble averages.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Overrides the run duration (s).
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    quiet: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parse(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn configure(args: &Args) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(d) = args.duration {
        cfg.duration_s = d;
    }
    if let Some(n) = args.ensemble {
        cfg.stats.ensemble = n;
    }
    if let Some(names) = &args.stats {
        let names: Vec<&String> = names.iter().filter(|n| !n.trim().is_empty()).collect();
        if names.is_empty() {
            return Err(Error::Config {
                field: "--stats".into(),
                msg: format!("no metrics given; valid names: {}", Metric::valid_names()),
            });
        }
        cfg.stats.metrics = names.into_iter().map(|n| Metric::parse(n)).collect::<Result<_, _>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_selection(args: &[EmitArg]) -> Emit {
    if args.contains(&EmitArg::All) {
        return Emit::ALL;
    }
    Emit {
        cir: args.contains(&EmitArg::Cir),
        pl: args.contains(&EmitArg::Pl),
        stats: args.contains(&EmitArg::Stats),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure(&args).and_then(|cfg| {
        let opts = RunOptions {
            output_dir: args.output_dir.clone(),
            emit: emit_selection(&args.emit),
        };
        run_simulation(&cfg, &opts)
    });
    match result {
        Ok(manifest) => {
            if !args.quiet {
                println!(
                    "wrote {} files to {} in {:.2} s",
                    manifest.files.len() + 1,
                    args.output_dir.display(),
                    manifest.wall_clock_s
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
