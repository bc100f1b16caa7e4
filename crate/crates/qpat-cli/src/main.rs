//! `qpat`: file-based experiments for quantitative photoacoustic tomography.
//!
//! Subcommands build phantoms, simulate absorbed-energy data, reconstruct
//! coefficients, run stability sweeps, and check illumination data, all
//! driven by a JSON manifest. Exit codes: 0 success, 1 check failed, 2 input
//! error, 3 numerical degeneracy, 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpat::Error;

mod commands;
mod manifest;

use commands::Options;
use manifest::load_manifest;

#[derive(Parser)]
#[command(
    name = "qpat",
    version,
    about = "Quantitative photoacoustic tomography experiments"
)]
struct Cli {
    /// Experiment manifest (JSON).
    #[arg(long, short, global = true)]
    manifest: Option<PathBuf>,

    /// Output directory (overrides the manifest's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Parallel workers for sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Reconstruct from the noisy measurement with this seed instead of the
    /// clean data.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    /// Override the manifest's nodes-per-axis.
    #[arg(long, global = true)]
    grid_n: Option<usize>,

    /// Suppress progress output.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the coefficient fields and verify their admissibility bounds.
    Phantom,
    /// Solve the photon densities and write absorbed-energy data.
    Simulate,
    /// Run the reconstruction pipeline on simulated measurements.
    Reconstruct,
    /// Run the perturbation sweep and fit the stability power law.
    Sweep,
    /// Check illumination traces: positivity, unimodality, frequency.
    CheckG {
        /// First illumination trace (default <out>/g1.trace.json).
        #[arg(long)]
        g1: Option<PathBuf>,
        /// Second illumination trace (default <out>/g2.trace.json).
        #[arg(long)]
        g2: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Stage { source, .. } => exit_code_for(source),
        Error::Degeneracy(_) | Error::DegenerateInput(_) => 3,
        Error::Solver { .. } => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let manifest_path = cli
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Parameter("--manifest is required".into()))?;
    let lm = load_manifest(manifest_path)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| lm.manifest.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let opts = Options {
        out_dir,
        jobs: cli.jobs.max(1),
        seed_override: cli.seed_override,
        grid_n: cli.grid_n,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Phantom => commands::cmd_phantom(&lm, &opts).map(|_| 0),
        Command::Simulate => commands::cmd_simulate(&lm, &opts).map(|_| 0),
        Command::Reconstruct => commands::cmd_reconstruct(&lm, &opts).map(|_| 0),
        Command::Sweep => commands::cmd_sweep(&lm, &opts).map(|_| 0),
        Command::CheckG { g1, g2 } => {
            commands::cmd_check_g(&lm, &opts, g1.as_deref(), g2.as_deref()).map(|pass| {
                if pass {
                    0
                } else {
                    1
                }
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
