//! `bsbl recover`: run one solver on a problem bundle.
//!
//! Exit codes: 0 on convergence, 2 when the iteration budget ran out
//! (the best iterate is still written), 1 on input errors.

use anyhow::{bail, Context, Result};
use bsbl_core::bo::{solve_bo, BoConfig};
use bsbl_core::ebsbl::{solve_ebsbl, SolverChoice};
use bsbl_core::em::{solve_em, EmConfig};
use bsbl_core::experiments::{nmse, oracle_ls};
use bsbl_core::group_lasso::{solve_group_lasso, GroupLassoProblem};
use bsbl_core::l1::{solve_l1, L1Config, RegRule};
use bsbl_core::{scaled_noisy_lambda_init, LambdaLearning, RecoveryResult};
use serde::Serialize;

use crate::args::RecoverArgs;
use crate::bundle::{read_bundle, Bundle};
use crate::manifest::RunManifest;
use crate::matio;

#[derive(Debug, Clone, Copy)]
enum NoiseMode {
    Noiseless,
    Learn,
    Fixed(f64),
}

fn parse_noise(arg: Option<&str>, bundle: &Bundle) -> Result<NoiseMode> {
    match arg {
        None => {
            // default: learn when the bundle says it is noisy
            if bundle.lambda_true.is_some() || bundle.snr_db.is_some() {
                Ok(NoiseMode::Learn)
            } else {
                Ok(NoiseMode::Noiseless)
            }
        }
        Some("noiseless") => Ok(NoiseMode::Noiseless),
        Some("learn") => Ok(NoiseMode::Learn),
        Some(other) => {
            if let Some(v) = other.strip_prefix("fixed:") {
                let value: f64 = v.parse().context("bad value in --noise fixed:<value>")?;
                if value <= 0.0 {
                    bail!("--noise fixed:<value> needs a positive value");
                }
                Ok(NoiseMode::Fixed(value))
            } else {
                bail!("--noise must be noiseless, learn, or fixed:<value>")
            }
        }
    }
}

#[derive(Serialize)]
struct RecoverReport {
    algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    nmse: Option<f64>,
    iterations: usize,
    converged: bool,
    learned_r: f64,
    cost_trace: Vec<f64>,
    x_hat: String,
    manifest: RunManifest,
}

pub fn run(args: &RecoverArgs, command_line: Vec<String>) -> Result<i32> {
    let bundle_dir = args.bundle.as_ref().context("--bundle is required")?;
    let algo = args.algo.as_ref().context("--algo is required")?.as_str();
    let out = args.out.as_ref().context("--out is required")?;
    let bundle = read_bundle(bundle_dir)?;
    let noise = parse_noise(args.noise.as_deref(), &bundle)?;
    let learn_corr = match args.learn_corr.as_deref() {
        None | Some("on") => true,
        Some("off") => false,
        Some(other) => bail!("--learn-corr must be on or off, got {other}"),
    };
    let h = args.h.unwrap_or(4);

    let em_config = |bundle: &Bundle| -> EmConfig {
        let mut cfg = match noise {
            NoiseMode::Noiseless => EmConfig::noiseless(),
            NoiseMode::Learn => EmConfig::noisy(scaled_noisy_lambda_init(bundle.problem.y())),
            NoiseMode::Fixed(v) => {
                let mut c = EmConfig::noiseless();
                c.lambda_learning = LambdaLearning::Off;
                c.lambda_init = v;
                c
            }
        };
        cfg.learn_correlation = learn_corr;
        if let Some(mi) = args.max_iters {
            cfg.max_iters = mi;
        }
        if let Some(t) = args.tol {
            cfg.tol = t;
        }
        cfg
    };
    let bo_config = |bundle: &Bundle| -> BoConfig {
        let mut cfg = match noise {
            NoiseMode::Noiseless => BoConfig::noiseless(),
            NoiseMode::Learn => BoConfig::noisy(scaled_noisy_lambda_init(bundle.problem.y())),
            NoiseMode::Fixed(v) => {
                let mut c = BoConfig::noiseless();
                c.lambda_learning = LambdaLearning::Off;
                c.lambda_init = v;
                c
            }
        };
        cfg.learn_correlation = learn_corr;
        if let Some(mi) = args.max_iters {
            cfg.max_iters = mi;
        }
        if let Some(t) = args.tol {
            cfg.tol = t;
        }
        cfg
    };
    let l1_config = || -> L1Config {
        let mut cfg = match noise {
            NoiseMode::Noiseless => L1Config::noiseless(),
            NoiseMode::Learn => L1Config::noisy(),
            NoiseMode::Fixed(v) => {
                let mut c = L1Config::noisy();
                c.lambda = Some(v);
                c
            }
        };
        cfg.learn_correlation = learn_corr;
        if let Some(oi) = args.outer_iters {
            cfg.outer_iters = oi;
        }
        if let Some(mi) = args.max_iters {
            cfg.inner_max_iters = mi;
        }
        if let Some(t) = args.tol {
            cfg.inner_tol = t;
        }
        if let Some(reg) = args.reg {
            cfg.reg_rule = RegRule::UserValue(reg);
        }
        cfg
    };

    let core = |r: bsbl_core::Result<RecoveryResult>| -> Result<RecoveryResult> {
        r.map_err(|e| anyhow::anyhow!("solver failed: {e}"))
    };
    let result: RecoveryResult = match algo {
        "bsbl-em" => core(solve_em(&bundle.problem, &bundle.partition, &em_config(&bundle)))?,
        "bsbl-bo" => core(solve_bo(&bundle.problem, &bundle.partition, &bo_config(&bundle)))?,
        "bsbl-l1" => core(solve_l1(&bundle.problem, &bundle.partition, &l1_config()))?,
        "ebsbl-em" => core(solve_ebsbl(
            &bundle.problem,
            h,
            &SolverChoice::Em(em_config(&bundle)),
        ))?,
        "ebsbl-bo" => core(solve_ebsbl(
            &bundle.problem,
            h,
            &SolverChoice::Bo(bo_config(&bundle)),
        ))?,
        "ebsbl-l1" => core(solve_ebsbl(
            &bundle.problem,
            h,
            &SolverChoice::L1(l1_config()),
        ))?,
        "group-lasso" => {
            let mut p = GroupLassoProblem::new(
                bundle.problem.y().clone(),
                bundle.problem.phi().clone(),
                bundle.partition.clone(),
                1.0,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            p.reg = match args.reg {
                Some(reg) => reg,
                None => {
                    let fraction = match noise {
                        NoiseMode::Noiseless => 1e-6,
                        _ => 0.01,
                    };
                    (fraction * p.critical_reg()).max(f64::MIN_POSITIVE)
                }
            };
            let sol = solve_group_lasso(
                &p,
                args.tol.unwrap_or(1e-10),
                args.max_iters.unwrap_or(20_000),
            );
            RecoveryResult {
                x_hat: sol.u,
                iterations: sol.iterations,
                converged: sol.converged,
                cost_trace: sol.objective_trace,
                learned_r: 0.0,
            }
        }
        "oracle" => {
            let x_gen = bundle
                .x_gen
                .as_ref()
                .context("oracle recovery needs x_gen in the bundle")?;
            let support: Vec<usize> = (0..bundle.partition.g())
                .flat_map(|i| {
                    let block = bundle.partition.block_of(x_gen, i);
                    if block.iter().any(|&v| v != 0.0) {
                        bundle.partition.range(i).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect();
            let x = oracle_ls(&bundle.problem, &support)
                .map_err(|e| anyhow::anyhow!("oracle failed: {e}"))?;
            RecoveryResult {
                x_hat: x,
                iterations: 0,
                converged: true,
                cost_trace: Vec::new(),
                learned_r: 0.0,
            }
        }
        other => bail!("unknown --algo {other}"),
    };

    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    matio::write_vector(&out.join("x_hat.csv"), &result.x_hat)?;
    let report = RecoverReport {
        algorithm: algo.to_string(),
        nmse: bundle.x_gen.as_ref().map(|x| nmse(&result.x_hat, x)),
        iterations: result.iterations,
        converged: result.converged,
        learned_r: result.learned_r,
        cost_trace: result.cost_trace.clone(),
        x_hat: "x_hat.csv".into(),
        manifest: RunManifest::new(command_line, None, serde_json::to_value(args)?),
    };
    std::fs::write(
        out.join("result.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    if let Some(e) = report.nmse {
        println!("{algo}: nmse {e:.6e}, {} iterations", result.iterations);
    } else {
        println!("{algo}: done, {} iterations", result.iterations);
    }
    Ok(if result.converged { 0 } else { 2 })
}
