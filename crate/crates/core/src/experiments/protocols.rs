//! The four sweep protocols. Each runner expands its configuration into a
//! list of (cell, trial) tasks, executes them on the rayon pool, and merges
//! the records in task order so the output is independent of scheduling.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::bo::{solve_bo, BoConfig};
use crate::ebsbl::{solve_ebsbl, SolverChoice};
use crate::em::{solve_em, EmConfig};
use crate::error::Result;
use crate::group_lasso::{solve_group_lasso, GroupLassoProblem};
use crate::l1::{solve_l1, L1Config};
use crate::model::BlockPartition;
use crate::solver::scaled_noisy_lambda_init;

use super::gen::{derive_seed, synthesize, GenSpec, IntraCorr, SynthBundle};
use super::metrics::{nmse, oracle_ls, success, TrialRecord};

/// Regularization fractions for the standalone group-lasso baseline,
/// matching the reweighted solver's defaults.
const GL_FRACTION_NOISY: f64 = 0.01;
const GL_FRACTION_NOISELESS: f64 = 1e-6;
const GL_TOL: f64 = 1e-10;
const GL_MAX_ITERS: usize = 20_000;

/// A solver variant as it appears in result tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Algorithm {
    BsblEm { learn_correlation: bool },
    BsblBo { learn_correlation: bool },
    BsblL1 { learn_correlation: bool },
    /// Block solver run with a user-imposed uniform partition of size `h`
    /// (for signals whose true partition is unknown).
    BsblEmUniform { h: usize },
    EbsblEm { h: usize },
    EbsblBo { h: usize },
    EbsblL1 { h: usize },
    GroupLasso,
    OracleLs,
}

impl Algorithm {
    pub fn id(&self) -> String {
        fn corr(on: bool) -> &'static str {
            if on {
                ""
            } else {
                "-nocorr"
            }
        }
        match self {
            Algorithm::BsblEm { learn_correlation } => format!("bsbl-em{}", corr(*learn_correlation)),
            Algorithm::BsblBo { learn_correlation } => format!("bsbl-bo{}", corr(*learn_correlation)),
            Algorithm::BsblL1 { learn_correlation } => format!("bsbl-l1{}", corr(*learn_correlation)),
            Algorithm::BsblEmUniform { h } => format!("bsbl-em-h{h}"),
            Algorithm::EbsblEm { h } => format!("ebsbl-em-h{h}"),
            Algorithm::EbsblBo { h } => format!("ebsbl-bo-h{h}"),
            Algorithm::EbsblL1 { h } => format!("ebsbl-l1-h{h}"),
            Algorithm::GroupLasso => "group-lasso".into(),
            Algorithm::OracleLs => "oracle".into(),
        }
    }

    /// Run this variant on one synthesized instance. `noisy` selects the
    /// solver presets (learned noise vs. pinned tiny noise).
    pub fn run(&self, synth: &SynthBundle) -> Result<AlgoOutcome> {
        let noisy = synth.lambda_true.is_some();
        let y = synth.problem.y();
        let em_cfg = |learn_correlation: bool| {
            let mut cfg = if noisy {
                EmConfig::noisy(scaled_noisy_lambda_init(y))
            } else {
                EmConfig::noiseless()
            };
            cfg.learn_correlation = learn_correlation;
            cfg
        };
        let bo_cfg = |learn_correlation: bool| {
            let mut cfg = if noisy {
                BoConfig::noisy(scaled_noisy_lambda_init(y))
            } else {
                BoConfig::noiseless()
            };
            cfg.learn_correlation = learn_correlation;
            cfg
        };
        let l1_cfg = |learn_correlation: bool| {
            let mut cfg = if noisy {
                L1Config::noisy()
            } else {
                L1Config::noiseless()
            };
            cfg.learn_correlation = learn_correlation;
            cfg
        };

        let out = match self {
            Algorithm::BsblEm { learn_correlation } => {
                let r = solve_em(&synth.problem, &synth.partition, &em_cfg(*learn_correlation))?;
                AlgoOutcome::from_result(r)
            }
            Algorithm::BsblBo { learn_correlation } => {
                let r = solve_bo(&synth.problem, &synth.partition, &bo_cfg(*learn_correlation))?;
                AlgoOutcome::from_result(r)
            }
            Algorithm::BsblL1 { learn_correlation } => {
                let r = solve_l1(&synth.problem, &synth.partition, &l1_cfg(*learn_correlation))?;
                AlgoOutcome::from_result(r)
            }
            Algorithm::BsblEmUniform { h } => {
                let partition = uniform_cover(synth.problem.n(), *h)?;
                let r = solve_em(&synth.problem, &partition, &em_cfg(true))?;
                AlgoOutcome::from_result(r)
            }
            Algorithm::EbsblEm { h } => AlgoOutcome::from_result(solve_ebsbl(
                &synth.problem,
                *h,
                &SolverChoice::Em(em_cfg(true)),
            )?),
            Algorithm::EbsblBo { h } => AlgoOutcome::from_result(solve_ebsbl(
                &synth.problem,
                *h,
                &SolverChoice::Bo(bo_cfg(true)),
            )?),
            Algorithm::EbsblL1 { h } => AlgoOutcome::from_result(solve_ebsbl(
                &synth.problem,
                *h,
                &SolverChoice::L1(l1_cfg(true)),
            )?),
            Algorithm::GroupLasso => {
                let fraction = if noisy {
                    GL_FRACTION_NOISY
                } else {
                    GL_FRACTION_NOISELESS
                };
                let mut p = GroupLassoProblem::new(
                    y.clone(),
                    synth.problem.phi().clone(),
                    synth.partition.clone(),
                    1.0,
                )?;
                p.reg = (fraction * p.critical_reg()).max(f64::MIN_POSITIVE);
                let sol = solve_group_lasso(&p, GL_TOL, GL_MAX_ITERS);
                AlgoOutcome {
                    x_hat: sol.u,
                    iterations: sol.iterations,
                    converged: sol.converged,
                    learned_r: 0.0,
                }
            }
            Algorithm::OracleLs => AlgoOutcome {
                x_hat: oracle_ls(&synth.problem, &synth.support_cols)?,
                iterations: 0,
                converged: true,
                learned_r: 0.0,
            },
        };
        Ok(out)
    }
}

/// Uniform partition of `n` indices into blocks of `h`, with one smaller
/// trailing block when `h` does not divide `n`.
fn uniform_cover(n: usize, h: usize) -> Result<BlockPartition> {
    let mut sizes = vec![h; n / h];
    if n % h != 0 {
        sizes.push(n % h);
    }
    BlockPartition::new(sizes)
}

pub struct AlgoOutcome {
    pub x_hat: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub learned_r: f64,
}

impl AlgoOutcome {
    fn from_result(r: crate::model::RecoveryResult) -> Self {
        Self {
            x_hat: r.x_hat,
            iterations: r.iterations,
            converged: r.converged,
            learned_r: r.learned_r,
        }
    }
}

/// Run every algorithm on one instance and record the outcomes.
fn run_algorithms(
    experiment: &str,
    cell: &str,
    seed: u64,
    synth: &SynthBundle,
    algorithms: &[Algorithm],
) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::with_capacity(algorithms.len());
    for algo in algorithms {
        let started = Instant::now();
        let outcome = algo.run(synth)?;
        let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        let err = nmse(&outcome.x_hat, &synth.x_gen);
        records.push(TrialRecord {
            experiment: experiment.to_string(),
            cell: cell.to_string(),
            algorithm: algo.id(),
            seed,
            nmse: err,
            success: success(err),
            iterations: outcome.iterations,
            wall_time_ms,
            learned_r: outcome.learned_r,
        });
    }
    Ok(records)
}

fn fmt_f(v: f64) -> String {
    // compact but unambiguous cell labels
    format!("{v}")
}

// ---------------------------------------------------------------------------
// phase transition
// ---------------------------------------------------------------------------

/// Phase-transition sweep over indeterminacy `delta = M/N` and sparsity
/// `rho = K/M` (K nonzero elements realized as whole blocks).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub n: usize,
    pub block_size: usize,
    pub deltas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub intra_corr: IntraCorr,
    pub normalize_blocks: bool,
    pub trials: usize,
    /// Success-rate threshold defining the transition curve.
    pub threshold: f64,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            n: 200,
            block_size: 10,
            deltas: vec![0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
            rhos: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            intra_corr: IntraCorr::Fixed(0.95),
            normalize_blocks: false,
            trials: 25,
            threshold: 0.9,
            algorithms: vec![
                Algorithm::BsblEm {
                    learn_correlation: true,
                },
                Algorithm::BsblBo {
                    learn_correlation: true,
                },
            ],
            master_seed: 0,
        }
    }
}

pub fn run_phase_transition(config: &PhaseConfig) -> Result<Vec<TrialRecord>> {
    let g = config.n / config.block_size;
    assert!(g >= 1, "block size larger than signal");
    let mut tasks = Vec::new();
    let mut seen = Vec::new();
    let mut cell_idx = 0u64;
    for &delta in &config.deltas {
        let m = (delta * config.n as f64).round() as usize;
        if m == 0 || m > config.n {
            continue;
        }
        for &rho in &config.rhos {
            let k_elems = (rho * m as f64).round() as usize;
            let k_active = (k_elems as f64 / config.block_size as f64).round() as usize;
            let k_elems = k_active * config.block_size;
            // infeasible, degenerate, or (after snapping K to whole blocks)
            // duplicate cells are skipped
            if k_active == 0 || k_active > g || k_elems > m || seen.contains(&(m, k_active)) {
                cell_idx += 1;
                continue;
            }
            seen.push((m, k_active));
            let actual_rho = k_elems as f64 / m as f64;
            let actual_delta = m as f64 / config.n as f64;
            let cell = format!(
                "delta={};rho={};m={m};k={k_elems}",
                fmt_f(actual_delta),
                fmt_f(actual_rho)
            );
            for trial in 0..config.trials {
                tasks.push((cell_idx, cell.clone(), m, k_active, trial as u64));
            }
            cell_idx += 1;
        }
    }
    let records: Result<Vec<Vec<TrialRecord>>> = tasks
        .par_iter()
        .map(|(cell_idx, cell, m, k_active, trial)| {
            let seed = derive_seed(config.master_seed, "phase", *cell_idx, *trial);
            let spec = GenSpec {
                m: *m,
                n: config.n,
                partition: BlockPartition::uniform(g, config.block_size)?,
                k_active: *k_active,
                intra_corr: config.intra_corr,
                normalize_blocks: config.normalize_blocks,
                snr_db: None,
                seed,
            };
            let synth = synthesize(&spec)?;
            run_algorithms("phase", cell, seed, &synth, &config.algorithms)
        })
        .collect();
    Ok(records?.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// correlation sweep
// ---------------------------------------------------------------------------

/// Noiseless sweep of the generating intra-block correlation, with solvers
/// run both exploiting and ignoring correlation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationConfig {
    pub m: usize,
    pub n: usize,
    pub block_size: usize,
    pub k_active: usize,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self {
            m: 100,
            n: 300,
            block_size: 4,
            k_active: 20,
            grid: vec![-0.99, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 0.95, 0.99],
            trials: 25,
            algorithms: vec![
                Algorithm::BsblEm {
                    learn_correlation: true,
                },
                Algorithm::BsblEm {
                    learn_correlation: false,
                },
                Algorithm::BsblBo {
                    learn_correlation: true,
                },
                Algorithm::BsblBo {
                    learn_correlation: false,
                },
                Algorithm::BsblL1 {
                    learn_correlation: true,
                },
                Algorithm::BsblL1 {
                    learn_correlation: false,
                },
            ],
            master_seed: 0,
        }
    }
}

pub fn run_correlation_sweep(config: &CorrelationConfig) -> Result<Vec<TrialRecord>> {
    let g = config.n / config.block_size;
    let mut tasks = Vec::new();
    for (cell_idx, &r) in config.grid.iter().enumerate() {
        let cell = format!("r={}", fmt_f(r));
        for trial in 0..config.trials {
            tasks.push((cell_idx as u64, cell.clone(), r, trial as u64));
        }
    }
    let records: Result<Vec<Vec<TrialRecord>>> = tasks
        .par_iter()
        .map(|(cell_idx, cell, r, trial)| {
            let seed = derive_seed(config.master_seed, "correlation", *cell_idx, *trial);
            let spec = GenSpec {
                m: config.m,
                n: config.n,
                partition: BlockPartition::uniform(g, config.block_size)?,
                k_active: config.k_active,
                intra_corr: IntraCorr::Fixed(*r),
                normalize_blocks: true,
                snr_db: None,
                seed,
            };
            let synth = synthesize(&spec)?;
            run_algorithms("correlation", cell, seed, &synth, &config.algorithms)
        })
        .collect();
    Ok(records?.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// noise sweep
// ---------------------------------------------------------------------------

/// SNR sweep with the oracle baseline included.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub m: usize,
    pub n: usize,
    pub block_size: usize,
    pub k_active: usize,
    pub corr_range: (f64, f64),
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            m: 128,
            n: 512,
            block_size: 8,
            k_active: 7,
            corr_range: (0.8, 1.0),
            snr_grid: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            trials: 25,
            algorithms: vec![
                Algorithm::BsblEm {
                    learn_correlation: true,
                },
                Algorithm::BsblBo {
                    learn_correlation: true,
                },
                Algorithm::BsblL1 {
                    learn_correlation: true,
                },
                Algorithm::GroupLasso,
                Algorithm::OracleLs,
            ],
            master_seed: 0,
        }
    }
}

pub fn run_noise_sweep(config: &NoiseConfig) -> Result<Vec<TrialRecord>> {
    let g = config.n / config.block_size;
    let mut tasks = Vec::new();
    for (cell_idx, &snr) in config.snr_grid.iter().enumerate() {
        let cell = format!("snr_db={}", fmt_f(snr));
        for trial in 0..config.trials {
            tasks.push((cell_idx as u64, cell.clone(), snr, trial as u64));
        }
    }
    let records: Result<Vec<Vec<TrialRecord>>> = tasks
        .par_iter()
        .map(|(cell_idx, cell, snr, trial)| {
            let seed = derive_seed(config.master_seed, "noise", *cell_idx, *trial);
            let spec = GenSpec {
                m: config.m,
                n: config.n,
                partition: BlockPartition::uniform(g, config.block_size)?,
                k_active: config.k_active,
                intra_corr: IntraCorr::UniformRange(config.corr_range.0, config.corr_range.1),
                normalize_blocks: false,
                snr_db: Some(*snr),
                seed,
            };
            let synth = synthesize(&spec)?;
            run_algorithms("noise", cell, seed, &synth, &config.algorithms)
        })
        .collect();
    Ok(records?.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// unknown partition
// ---------------------------------------------------------------------------

/// Sweep over the number of nonzero blocks when the partition is unknown:
/// the expanded-model solvers see no partition, the fixed-partition entries
/// impose uniform blocks of the window size, and the group-lasso baseline
/// uses an arbitrary fixed partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnknownPartitionConfig {
    pub m: usize,
    pub n: usize,
    pub total_nonzero: usize,
    pub g0_values: Vec<usize>,
    pub corr_range: (f64, f64),
    pub snr_db: f64,
    pub trials: usize,
    pub h_values: Vec<usize>,
    /// Include block solvers with user-imposed uniform partitions.
    pub include_fixed_partition: bool,
    /// Block size for the group-lasso baseline partition.
    pub baseline_block_size: usize,
    pub master_seed: u64,
}

impl Default for UnknownPartitionConfig {
    fn default() -> Self {
        Self {
            m: 192,
            n: 512,
            total_nonzero: 48,
            g0_values: vec![2, 4, 6, 8, 10],
            corr_range: (0.8, 1.0),
            snr_db: 15.0,
            trials: 25,
            h_values: vec![4, 8],
            include_fixed_partition: true,
            baseline_block_size: 8,
            master_seed: 0,
        }
    }
}

/// Composition of `total` into `parts` positive integers, uniform over the
/// cut-point choices.
fn random_sizes(total: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(parts >= 1 && total >= parts);
    let mut cuts = rand::seq::index::sample(rng, total - 1, parts - 1).into_vec();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for c in cuts {
        sizes.push(c + 1 - prev);
        prev = c + 1;
    }
    sizes.push(total - prev);
    sizes
}

/// Nonnegative gaps distributing `slack` around `parts` blocks.
fn random_gaps(slack: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut cuts: Vec<usize> = (0..parts).map(|_| rng.random_range(0..=slack)).collect();
    cuts.sort_unstable();
    let mut gaps = Vec::with_capacity(parts + 1);
    let mut prev = 0usize;
    for c in cuts {
        gaps.push(c - prev);
        prev = c;
    }
    gaps.push(slack - prev);
    gaps
}

/// Generate a signal with `g0` non-overlapping blocks of random sizes
/// summing to `total_nonzero`, at random locations, each an AR(1) draw with
/// a coefficient uniform in `corr_range`.
fn sample_unknown_signal(
    n: usize,
    total_nonzero: usize,
    g0: usize,
    corr_range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> (Array1<f64>, Vec<usize>) {
    let sizes = random_sizes(total_nonzero, g0, rng);
    let gaps = random_gaps(n - total_nonzero, g0, rng);
    let mut x = Array1::<f64>::zeros(n);
    let mut support = Vec::with_capacity(total_nonzero);
    let mut pos = 0usize;
    for (i, &d) in sizes.iter().enumerate() {
        pos += gaps[i];
        let r = if corr_range.0 == corr_range.1 {
            corr_range.0
        } else {
            rng.random_range(corr_range.0..corr_range.1)
        };
        let innovation = (1.0 - r * r).sqrt();
        let mut prev: f64 = rng.sample(rand_distr::StandardNormal);
        for k in 0..d {
            if k > 0 {
                let e: f64 = rng.sample(rand_distr::StandardNormal);
                prev = r * prev + innovation * e;
            }
            x[pos + k] = prev;
            support.push(pos + k);
        }
        pos += d;
    }
    (x, support)
}

/// Synthesize one unknown-partition trial: `g0` non-overlapping blocks of
/// random sizes totalling `total_nonzero` elements at random positions in a
/// length-`n` signal, measured through a fresh sensing matrix at the given
/// SNR. The bundle's partition is a uniform cover of size 8 intended only
/// for baselines that require some partition.
pub fn synth_unknown_partition(
    m: usize,
    n: usize,
    total_nonzero: usize,
    g0: usize,
    corr_range: (f64, f64),
    snr_db: f64,
    seed: u64,
) -> Result<SynthBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // phi from the same stream as the signal and noise
    let phi = {
        use rand_distr::StandardNormal;
        let mut phi = ndarray::Array2::<f64>::zeros((m, n));
        for v in phi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for mut col in phi.columns_mut() {
            let norm = col.dot(&col).sqrt();
            if norm > 0.0 {
                col.mapv_inplace(|x| x / norm);
            }
        }
        phi
    };
    let (x_gen, support_cols) = sample_unknown_signal(n, total_nonzero, g0, corr_range, &mut rng);
    let clean = phi.dot(&x_gen);
    let (y, lambda_true) = super::gen::add_noise(&clean, snr_db, &mut rng);
    Ok(SynthBundle {
        problem: crate::model::Problem::new(y, phi)?,
        partition: uniform_cover(n, 8)?,
        x_gen,
        active_blocks: Vec::new(),
        support_cols,
        lambda_true: Some(lambda_true),
    })
}

pub fn run_unknown_partition(config: &UnknownPartitionConfig) -> Result<Vec<TrialRecord>> {
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for &h in &config.h_values {
        algorithms.push(Algorithm::EbsblBo { h });
        if config.include_fixed_partition {
            algorithms.push(Algorithm::BsblEmUniform { h });
        }
    }
    algorithms.push(Algorithm::GroupLasso);

    let mut tasks = Vec::new();
    for (cell_idx, &g0) in config.g0_values.iter().enumerate() {
        let cell = format!("g0={g0}");
        for trial in 0..config.trials {
            tasks.push((cell_idx as u64, cell.clone(), g0, trial as u64));
        }
    }
    let records: Result<Vec<Vec<TrialRecord>>> = tasks
        .par_iter()
        .map(|(cell_idx, cell, g0, trial)| {
            let seed = derive_seed(config.master_seed, "unknown-partition", *cell_idx, *trial);
            let mut synth = synth_unknown_partition(
                config.m,
                config.n,
                config.total_nonzero,
                *g0,
                config.corr_range,
                config.snr_db,
                seed,
            )?;
            synth.partition = uniform_cover(config.n, config.baseline_block_size)?;
            run_algorithms("unknown-partition", cell, seed, &synth, &algorithms)
        })
        .collect();
    Ok(records?.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// aggregation
// ---------------------------------------------------------------------------

/// Per-(cell, algorithm) aggregate of trial records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub experiment: String,
    pub cell: String,
    pub algorithm: String,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_nmse: f64,
    pub median_nmse: f64,
    pub median_iterations: f64,
    pub median_wall_time_ms: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Group records by (cell, algorithm), preserving first-seen order.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut order: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.cell.clone(), r.algorithm.clone());
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|(cell, algorithm)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.cell == cell && r.algorithm == algorithm)
                .collect();
            let n = group.len();
            let mut nmses: Vec<f64> = group.iter().map(|r| r.nmse).collect();
            let mut iters: Vec<f64> = group.iter().map(|r| r.iterations as f64).collect();
            let mut times: Vec<f64> = group.iter().map(|r| r.wall_time_ms).collect();
            CellSummary {
                experiment: group[0].experiment.clone(),
                cell,
                algorithm,
                trials: n,
                success_rate: group.iter().filter(|r| r.success).count() as f64 / n as f64,
                mean_nmse: nmses.iter().sum::<f64>() / n as f64,
                median_nmse: median(&mut nmses),
                median_iterations: median(&mut iters),
                median_wall_time_ms: median(&mut times),
            }
        })
        .collect()
}

/// One point of the phase-transition curve: for each (algorithm, delta) the
/// largest rho whose success rate meets the threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseCurvePoint {
    pub algorithm: String,
    pub delta: f64,
    pub rho_star: Option<f64>,
}

pub fn phase_curve(summaries: &[CellSummary], threshold: f64) -> Vec<PhaseCurvePoint> {
    fn cell_param(cell: &str, name: &str) -> Option<f64> {
        cell.split(';').find_map(|kv| {
            let (k, v) = kv.split_once('=')?;
            (k == name).then(|| v.parse().ok())?
        })
    }
    let mut points: Vec<PhaseCurvePoint> = Vec::new();
    for s in summaries {
        let (Some(delta), Some(rho)) = (cell_param(&s.cell, "delta"), cell_param(&s.cell, "rho"))
        else {
            continue;
        };
        let entry = points
            .iter_mut()
            .find(|p| p.algorithm == s.algorithm && p.delta == delta);
        let qualifies = s.success_rate >= threshold;
        match entry {
            Some(p) => {
                if qualifies && p.rho_star.map_or(true, |best| rho > best) {
                    p.rho_star = Some(rho);
                }
            }
            None => points.push(PhaseCurvePoint {
                algorithm: s.algorithm.clone(),
                delta,
                rho_star: qualifies.then_some(rho),
            }),
        }
    }
    points
}
