//! Argument parsing with a three-level precedence: command-line flags
//! override values from an optional TOML config file, which override the
//! built-in defaults. The same Option-typed structs serve both clap and
//! the config file, so every flag has a config equivalent by construction.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "bsbl",
    version,
    about = "Block-sparse Bayesian learning: synthesis, recovery, and benchmarks"
)]
pub struct Cli {
    /// TOML file with [synth]/[recover]/[bench] sections supplying defaults
    /// for any flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic problem bundle on disk
    Synth(SynthArgs),
    /// Recover a signal from a problem bundle
    Recover(RecoverArgs),
    /// Run one of the benchmark experiments
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// Number of measurements
    #[arg(long)]
    pub m: Option<usize>,
    /// Signal length
    #[arg(long)]
    pub n: Option<usize>,
    /// Uniform block size (alternative to --sizes)
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Explicit comma-separated block sizes
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Number of nonzero blocks
    #[arg(long)]
    pub k_active: Option<usize>,
    /// Fixed intra-block correlation in (-1, 1)
    #[arg(long)]
    pub corr: Option<f64>,
    /// Uniform correlation range `lo,hi`
    #[arg(long, value_delimiter = ',')]
    pub corr_range: Option<Vec<f64>>,
    /// Normalize each nonzero block to unit norm
    #[arg(long)]
    pub normalize_blocks: Option<bool>,
    /// Measurement SNR in dB (omit for noiseless)
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output bundle directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverArgs {
    /// Problem bundle directory
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// One of: bsbl-em | bsbl-bo | bsbl-l1 | ebsbl-em | ebsbl-bo | ebsbl-l1
    /// | group-lasso | oracle
    #[arg(long)]
    pub algo: Option<String>,
    /// Window size for the ebsbl-* algorithms
    #[arg(long)]
    pub h: Option<usize>,
    /// Learn intra-block correlation: on | off
    #[arg(long)]
    pub learn_corr: Option<String>,
    /// Noise handling: noiseless | learn | fixed:<value>
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Group-lasso regularization (group-lasso and bsbl-l1 inner problems)
    #[arg(long)]
    pub reg: Option<f64>,
    /// Outer reweighting iterations for bsbl-l1
    #[arg(long)]
    pub outer_iters: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchArgs {
    /// One of: phase | correlation | noise | unknown-partition
    #[arg(long)]
    pub experiment: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for results.csv and summary.json
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep grid: correlation values, SNR values, rho values, or g0 values
    /// depending on the experiment
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Indeterminacy grid for the phase experiment
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub k_active: Option<usize>,
    /// Fixed intra-block correlation (phase experiment)
    #[arg(long)]
    pub corr: Option<f64>,
    /// SNR for the unknown-partition experiment
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Window sizes for the unknown-partition experiment
    #[arg(long, value_delimiter = ',')]
    pub h_values: Option<Vec<usize>>,
    /// Success-rate threshold for the phase-transition curve
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Record wall times in the CSV (makes output non-reproducible)
    #[arg(long)]
    pub timing: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: SynthArgs,
    pub recover: RecoverArgs,
    pub bench: BenchArgs,
}

pub fn load_file_config(path: Option<&PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config file {}", p.display()))
        }
    }
}

/// Flag beats config file; either beats the caller's default.
pub fn merge<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

pub fn merged_synth(cli: &SynthArgs, file: &SynthArgs) -> SynthArgs {
    SynthArgs {
        m: merge(&cli.m, &file.m),
        n: merge(&cli.n, &file.n),
        block_size: merge(&cli.block_size, &file.block_size),
        sizes: merge(&cli.sizes, &file.sizes),
        k_active: merge(&cli.k_active, &file.k_active),
        corr: merge(&cli.corr, &file.corr),
        corr_range: merge(&cli.corr_range, &file.corr_range),
        normalize_blocks: merge(&cli.normalize_blocks, &file.normalize_blocks),
        snr_db: merge(&cli.snr_db, &file.snr_db),
        seed: merge(&cli.seed, &file.seed),
        out: merge(&cli.out, &file.out),
    }
}

pub fn merged_recover(cli: &RecoverArgs, file: &RecoverArgs) -> RecoverArgs {
    RecoverArgs {
        bundle: merge(&cli.bundle, &file.bundle),
        algo: merge(&cli.algo, &file.algo),
        h: merge(&cli.h, &file.h),
        learn_corr: merge(&cli.learn_corr, &file.learn_corr),
        noise: merge(&cli.noise, &file.noise),
        max_iters: merge(&cli.max_iters, &file.max_iters),
        tol: merge(&cli.tol, &file.tol),
        reg: merge(&cli.reg, &file.reg),
        outer_iters: merge(&cli.outer_iters, &file.outer_iters),
        out: merge(&cli.out, &file.out),
    }
}

pub fn merged_bench(cli: &BenchArgs, file: &BenchArgs) -> BenchArgs {
    BenchArgs {
        experiment: merge(&cli.experiment, &file.experiment),
        trials: merge(&cli.trials, &file.trials),
        seed: merge(&cli.seed, &file.seed),
        out: merge(&cli.out, &file.out),
        grid: merge(&cli.grid, &file.grid),
        deltas: merge(&cli.deltas, &file.deltas),
        m: merge(&cli.m, &file.m),
        n: merge(&cli.n, &file.n),
        block_size: merge(&cli.block_size, &file.block_size),
        k_active: merge(&cli.k_active, &file.k_active),
        corr: merge(&cli.corr, &file.corr),
        snr_db: merge(&cli.snr_db, &file.snr_db),
        h_values: merge(&cli.h_values, &file.h_values),
        threshold: merge(&cli.threshold, &file.threshold),
        timing: merge(&cli.timing, &file.timing),
    }
}
