//! `qdiff`: reproducible experiment runner for the statevector diffusion
//! laboratory. Every command resolves one experiment configuration (named
//! preset, TOML file, or both layered), runs with fully seeded randomness,
//! and writes its outputs plus a checksummed manifest into one directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric/degeneracy
//! abort, 4 I/O failure.

mod commands;
mod config;
mod fail;
mod formats;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{CliOverrides, ExperimentConfig};
use crate::fail::{CmdResult, Failure};
use crate::formats::SetFormat;

#[derive(Parser)]
#[command(
    name = "qdiff",
    version,
    about = "Statevector diffusion laboratory: scramble quantum state \
             ensembles forward, train conditioned denoisers backward"
)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Named preset to start from; file values override it.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Master seed; overrides the config file.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory (default: runs/<config name>/<command>).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker thread count; never changes results, only wall time.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw the target state sets and write one file per class.
    GenData {
        /// Container format for state-set files.
        #[arg(long, value_enum, default_value_t = SetFormat::Binary)]
        format: SetFormat,
    },
    /// Run forward scrambling and report per-step divergence from Haar.
    Diffuse {
        #[arg(long, value_enum, default_value_t = SetFormat::Binary)]
        format: SetFormat,
    },
    /// Train the backward denoising model.
    Train,
    /// Generate fresh samples from a trained model.
    Sample {
        /// Trained model checkpoint (model.json).
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Samples per class (default: samples_per_class from the config).
        #[arg(long, value_name = "N")]
        count: Option<usize>,
        #[arg(long, value_enum, default_value_t = SetFormat::Binary)]
        format: SetFormat,
    },
    /// Score generated ensembles against the configured targets.
    Eval {
        /// Trained model checkpoint to regenerate train/test sets from.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Directory of state-set files to score instead of a model.
        #[arg(long, value_name = "DIR")]
        states: Option<PathBuf>,
    },
    /// Train across a hyperparameter grid ([ablate] section in the config).
    Ablate,
    /// Sweep the conditioning angle of a trained model over [0, 2π].
    SweepMu {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Number of uniform grid points (default from [sweep] or 16).
        #[arg(long, value_name = "N")]
        points: Option<usize>,
    },
    /// Train conditioned vs pooled-unconditioned models with shared seeds.
    Benchmark,
    /// Train the task under basis/rx/ry/rz conditioning with shared seeds.
    CompareConditioning,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenData { .. } => "gen-data",
            Command::Diffuse { .. } => "diffuse",
            Command::Train => "train",
            Command::Sample { .. } => "sample",
            Command::Eval { .. } => "eval",
            Command::Ablate => "ablate",
            Command::SweepMu { .. } => "sweep-mu",
            Command::Benchmark => "benchmark",
            Command::CompareConditioning => "compare-conditioning",
        }
    }
}

fn out_dir(cli_out: Option<PathBuf>, config: &ExperimentConfig, command: &str) -> PathBuf {
    cli_out.unwrap_or_else(|| PathBuf::from("runs").join(&config.name).join(command))
}

fn run(cli: Cli) -> CmdResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::config(format!("cannot size the thread pool: {e}")))?;
    }

    let overrides = CliOverrides {
        preset: cli.preset.clone(),
        seed: cli.seed,
    };
    let config = config::load(cli.config.as_deref(), &overrides)?;
    let out = out_dir(cli.out, &config, cli.command.name());

    match &cli.command {
        Command::GenData { format } => commands::gen_data::run(&config, &out, *format),
        Command::Diffuse { format } => commands::diffuse::run(&config, &out, *format),
        Command::Train => commands::train::run(&config, &out),
        Command::Sample {
            model,
            count,
            format,
        } => commands::sample::run(&config, &out, model, *count, *format),
        Command::Eval { model, states } => {
            commands::eval::run(&config, &out, model.as_deref(), states.as_deref())
        }
        Command::Ablate => commands::ablate::run(&config, &out),
        Command::SweepMu { model, points } => {
            commands::sweep_mu::run(&config, &out, model, *points)
        }
        Command::Benchmark => commands::benchmark::run(&config, &out),
        Command::CompareConditioning => commands::compare_conditioning::run(&config, &out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
