//! `bsbl bench`: run a benchmark experiment and export results.
//!
//! Outputs `results.csv` (one row per trial, byte-reproducible for a fixed
//! seed unless `--timing` is set) and `summary.json` (per-cell aggregates,
//! the phase curve when applicable, and the run manifest).

use anyhow::{bail, Context, Result};
use bsbl_core::experiments::{
    phase_curve, run_correlation_sweep, run_noise_sweep, run_phase_transition,
    run_unknown_partition, summarize, CellSummary, CorrelationConfig, IntraCorr, NoiseConfig,
    PhaseConfig, PhaseCurvePoint, TrialRecord, UnknownPartitionConfig,
};
use serde::Serialize;
use std::fmt::Write as _;

use crate::args::BenchArgs;
use crate::manifest::RunManifest;
use crate::matio::format_f64;

#[derive(Serialize)]
struct BenchSummary {
    experiment: String,
    cells: Vec<CellSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_curve: Option<Vec<PhaseCurvePoint>>,
    results_csv: String,
    manifest: RunManifest,
}

pub fn records_to_csv(records: &[TrialRecord], timing: bool) -> String {
    let mut out = String::from(
        "experiment,cell,algorithm,seed,nmse,success,iterations,wall_time_ms,learned_r\n",
    );
    for r in records {
        let wall = if timing {
            format!("{:.3}", r.wall_time_ms)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.cell,
            r.algorithm,
            r.seed,
            format_f64(r.nmse),
            r.success,
            r.iterations,
            wall,
            format_f64(r.learned_r),
        );
    }
    out
}

pub fn run(args: &BenchArgs, command_line: Vec<String>) -> Result<()> {
    let experiment = args
        .experiment
        .as_ref()
        .context("--experiment is required")?
        .as_str();
    let out = args.out.as_ref().context("--out is required")?;
    let master_seed = args.seed.unwrap_or(0);
    let timing = args.timing.unwrap_or(false);

    let (records, curve) = match experiment {
        "phase" => {
            let mut config = PhaseConfig {
                master_seed,
                ..PhaseConfig::default()
            };
            if let Some(n) = args.n {
                config.n = n;
            }
            if let Some(d) = args.block_size {
                config.block_size = d;
            }
            if let Some(t) = args.trials {
                config.trials = t;
            }
            if let Some(grid) = &args.grid {
                config.rhos = grid.clone();
            }
            if let Some(deltas) = &args.deltas {
                config.deltas = deltas.clone();
            }
            if let Some(r) = args.corr {
                config.intra_corr = IntraCorr::Fixed(r);
            }
            if let Some(th) = args.threshold {
                config.threshold = th;
            }
            let records =
                run_phase_transition(&config).map_err(|e| anyhow::anyhow!("{e}"))?;
            let summaries = summarize(&records);
            let curve = phase_curve(&summaries, config.threshold);
            (records, Some(curve))
        }
        "correlation" => {
            let mut config = CorrelationConfig {
                master_seed,
                ..CorrelationConfig::default()
            };
            if let Some(m) = args.m {
                config.m = m;
            }
            if let Some(n) = args.n {
                config.n = n;
            }
            if let Some(d) = args.block_size {
                config.block_size = d;
            }
            if let Some(k) = args.k_active {
                config.k_active = k;
            }
            if let Some(t) = args.trials {
                config.trials = t;
            }
            if let Some(grid) = &args.grid {
                config.grid = grid.clone();
            }
            (
                run_correlation_sweep(&config).map_err(|e| anyhow::anyhow!("{e}"))?,
                None,
            )
        }
        "noise" => {
            let mut config = NoiseConfig {
                master_seed,
                ..NoiseConfig::default()
            };
            if let Some(m) = args.m {
                config.m = m;
            }
            if let Some(n) = args.n {
                config.n = n;
            }
            if let Some(d) = args.block_size {
                config.block_size = d;
            }
            if let Some(k) = args.k_active {
                config.k_active = k;
            }
            if let Some(t) = args.trials {
                config.trials = t;
            }
            if let Some(grid) = &args.grid {
                config.snr_grid = grid.clone();
            }
            (
                run_noise_sweep(&config).map_err(|e| anyhow::anyhow!("{e}"))?,
                None,
            )
        }
        "unknown-partition" => {
            let mut config = UnknownPartitionConfig {
                master_seed,
                ..UnknownPartitionConfig::default()
            };
            if let Some(m) = args.m {
                config.m = m;
            }
            if let Some(n) = args.n {
                config.n = n;
            }
            if let Some(t) = args.trials {
                config.trials = t;
            }
            if let Some(grid) = &args.grid {
                config.g0_values = grid.iter().map(|&g| g as usize).collect();
            }
            if let Some(h) = &args.h_values {
                config.h_values = h.clone();
            }
            if let Some(snr) = args.snr_db {
                config.snr_db = snr;
            }
            (
                run_unknown_partition(&config).map_err(|e| anyhow::anyhow!("{e}"))?,
                None,
            )
        }
        other => bail!("unknown --experiment {other}"),
    };

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    std::fs::write(out.join("results.csv"), records_to_csv(&records, timing))?;
    let summary = BenchSummary {
        experiment: experiment.to_string(),
        cells: summarize(&records),
        phase_curve: curve,
        results_csv: "results.csv".into(),
        manifest: RunManifest::new(command_line, Some(master_seed), serde_json::to_value(args)?),
    };
    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{experiment}: {} trials recorded to {}",
        records.len(),
        out.join("results.csv").display()
    );
    Ok(())
}
