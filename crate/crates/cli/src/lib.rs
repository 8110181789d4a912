//! Batch front end: loads a TOML run configuration, runs one analysis
//! command and writes CSV files with a provenance header.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use mmv2x_core::channel::Band;

pub use commands::{run_command, Command};
pub use config::{load_config, ConfigError, RunConfig};

const DEFAULT_OUTPUT_DIR: &str = "mmv2x-output";

#[derive(Debug, Parser)]
#[command(name = "mmv2x", version, about = "Feasibility of mmWave V2V links for cooperative perception")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Root seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Restrict the run to one band.
    #[arg(long)]
    pub preset: Option<Band>,
}

/// Loads the config and applies command-line overrides.
pub fn resolve_config(args: &Args) -> Result<RunConfig> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(band) = args.preset {
        cfg.radio.preset = Some(band);
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one invocation and returns the files written.
pub fn run(args: &Args) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        anyhow::ensure!(n > 0, "--threads must be at least 1");
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("cannot start worker threads")?;
    let outputs = pool.install(|| run_command(args.command, &cfg))?;
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    outputs
        .commit(&dir)
        .with_context(|| format!("cannot write outputs to {}", dir.display()))
}
