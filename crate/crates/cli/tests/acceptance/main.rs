//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them). Thresholds are
//! pinned in code; every expected value is computed by an independent
//! oracle or taken from a frozen closed form.

#[path = "../../../core/tests/common/mod.rs"]
mod oracle;

use std::sync::OnceLock;
use std::time::Instant;

use bsbl_core::bo::{solve_bo, update_gamma_bo, BoConfig};
use bsbl_core::ebsbl::{solve_ebsbl, SolverChoice};
use bsbl_core::em::{
    solve_em, update_correlation, update_gamma_em, update_lambda_naive, update_lambda_robust,
    EmConfig,
};
use bsbl_core::experiments::{
    derive_seed, run_correlation_sweep, run_noise_sweep, run_phase_transition, summarize,
    synth_unknown_partition, synthesize, Algorithm, CorrelationConfig, GenSpec, IntraCorr,
    NoiseConfig, PhaseConfig, TrialRecord,
};
use bsbl_core::group_lasso::{solve_group_lasso, GroupLassoProblem};
use bsbl_core::l1::{build_inner_problem, compute_weights, solve_l1, L1Config, RegRule};
use bsbl_core::model::compute_posterior;
use bsbl_core::{BlockPartition, LambdaLearning};
use oracle::*;
use rayon::prelude::*;

const MASTER_SEED: u64 = 42;

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion} ({name}): {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

// ---------------------------------------------------------------------------
// 1. dense-oracle equivalence of every update rule
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_dense_oracle_equivalence() {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut track = |rule: &str, err: f64, instance: u64| {
        assert!(
            err <= 1e-10,
            "rule {rule} deviates by {err:.3e} on instance {instance}"
        );
        worst = worst.max(err);
    };

    for instance in 0..50u64 {
        let equal = instance % 2 == 0;
        let (problem, partition, hp) = random_instance(1000 + instance, equal);
        let post = compute_posterior(&problem, &partition, &hp).unwrap();
        let dense = dense_posterior(&problem, &partition, &hp);

        // gamma EM rule
        let gamma_impl = update_gamma_em(&post, &hp, &partition).unwrap();
        let gamma_naive = naive_gamma_em(&dense, &partition, &hp);
        track("gamma-em", max_rel_err_slice(&gamma_impl, &gamma_naive), instance);

        // full-covariance noise rule
        let lam_impl = update_lambda_naive(&problem, &partition, &hp).unwrap();
        let lam_naive = naive_lambda_full(&problem, &dense);
        track("lambda-full", rel_err(lam_impl, lam_naive), instance);

        // per-block noise rule
        let lam_impl = update_lambda_robust(&problem, &post, &partition);
        let lam_naive = naive_lambda_robust(&problem, &dense, &partition);
        track("lambda-robust", rel_err(lam_impl, lam_naive), instance);

        // correlation re-estimation (averaged path on uniform partitions,
        // pooled path otherwise)
        let upd = update_correlation(&post, &hp.gamma, &partition, equal).unwrap();
        let (b_naive, r_naive) = naive_b_update(&dense, &partition, &hp.gamma, equal);
        track("correlation-r", rel_err(upd.r.value(), r_naive), instance);
        for (bi, bn) in upd.b.iter().zip(b_naive.iter()) {
            track("correlation-b", mat_rel_err(bi, bn), instance);
        }

        // bound-optimization gamma rule
        let gamma_impl = update_gamma_bo(&problem, &partition, &hp).unwrap();
        let gamma_naive = naive_gamma_bo(&problem, &dense, &partition, &hp);
        track("gamma-bo", max_rel_err_slice(&gamma_impl, &gamma_naive), instance);

        // dual weights
        let w_impl = compute_weights(&problem, &hp, &partition).unwrap();
        let (z_naive, w_naive) = naive_weights(&problem, &partition, &hp);
        track("weights-z", max_rel_err_slice(&w_impl.z, &z_naive), instance);
        track("weights-w", max_rel_err_slice(&w_impl.w, &w_naive), instance);

        // transformed dictionary and its round trip
        let inner = build_inner_problem(&problem, &w_impl, &hp.b, &partition).unwrap();
        let h_naive = naive_inner_h(&problem, &partition, &hp.b, &w_naive);
        track("transform-h", mat_rel_err(&inner.gl.h, &h_naive), instance);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(instance);
        use rand::SeedableRng;
        let x = random_vec(problem.n(), &mut rng);
        let u = inner.transform_x(&x);
        let hu = inner.gl.h.dot(&u);
        let px = problem.phi().dot(&x);
        track("transform-roundtrip", vec_rel_err(&hu, &px), instance);
    }

    let elapsed = started.elapsed().as_secs_f64();
    report(
        1,
        "dense-oracle equivalence",
        worst <= 1e-10 && elapsed < 10.0,
        &format!("worst relative error {worst:.3e} over 50 instances in {elapsed:.1}s"),
    );
}

// ---------------------------------------------------------------------------
// 2. descent properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_descent_properties() {
    let started = Instant::now();
    // The gamma-rule descent guarantee holds with the noise variance and
    // correlation matrices frozen and pruning disabled; the robust noise
    // rule and the Toeplitz projection intentionally trade monotonicity
    // for robustness.
    let mut worst_solver: f64 = 0.0;
    for trial in 0..20u64 {
        let spec = GenSpec {
            m: 32,
            n: 64,
            partition: BlockPartition::uniform(16, 4).unwrap(),
            k_active: 3,
            intra_corr: IntraCorr::UniformRange(0.5, 0.95),
            normalize_blocks: false,
            snr_db: Some(15.0),
            seed: derive_seed(MASTER_SEED, "acceptance-descent", 0, trial),
        };
        let synth = synthesize(&spec).unwrap();
        let lam = synth.lambda_true.unwrap();
        let mut em_cfg = EmConfig::noisy(lam);
        em_cfg.lambda_learning = LambdaLearning::Off;
        em_cfg.lambda_init = lam;
        em_cfg.learn_correlation = false;
        em_cfg.prune_gamma = 0.0;
        let em = solve_em(&synth.problem, &synth.partition, &em_cfg).unwrap();
        let mut bo_cfg = BoConfig::noisy(lam);
        bo_cfg.lambda_learning = LambdaLearning::Off;
        bo_cfg.lambda_init = lam;
        bo_cfg.learn_correlation = false;
        bo_cfg.prune_gamma = 0.0;
        let bo = solve_bo(&synth.problem, &synth.partition, &bo_cfg).unwrap();
        for trace in [&em.cost_trace, &bo.cost_trace] {
            for w in trace.windows(2) {
                let rise = (w[1] - w[0]) / (1.0 + w[0].abs());
                worst_solver = worst_solver.max(rise);
            }
        }
    }

    // group-lasso inner objective per iteration
    let mut worst_gl: f64 = 0.0;
    for trial in 0..20u64 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
            derive_seed(MASTER_SEED, "acceptance-descent-gl", 0, trial),
        );
        let h = random_dense(12, 20, &mut rng);
        let y = random_vec(12, &mut rng);
        let partition = BlockPartition::uniform(5, 4).unwrap();
        let base = GroupLassoProblem::new(y, h, partition, 1.0).unwrap();
        let reg = 0.05 * base.critical_reg();
        let p = GroupLassoProblem { reg, ..base };
        let sol = solve_group_lasso(&p, 1e-12, 3000);
        for w in sol.objective_trace.windows(2) {
            let rise = (w[1] - w[0]) / (1.0 + w[0].abs());
            worst_gl = worst_gl.max(rise);
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    report(
        2,
        "descent properties",
        worst_solver <= 1e-9 && worst_gl <= 1e-9 && elapsed < 30.0,
        &format!(
            "worst solver rise {worst_solver:.3e}, worst group-lasso rise {worst_gl:.3e} in {elapsed:.1}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. correlation benefit
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_correlation_benefit() {
    let started = Instant::now();
    let config = CorrelationConfig {
        grid: vec![0.95],
        trials: 50,
        algorithms: vec![
            Algorithm::BsblEm {
                learn_correlation: true,
            },
            Algorithm::BsblEm {
                learn_correlation: false,
            },
        ],
        master_seed: MASTER_SEED,
        ..CorrelationConfig::default()
    };
    let records = run_correlation_sweep(&config).unwrap();
    let on: Vec<f64> = records
        .iter()
        .filter(|r| r.algorithm == "bsbl-em")
        .map(|r| r.nmse)
        .collect();
    let off: Vec<f64> = records
        .iter()
        .filter(|r| r.algorithm == "bsbl-em-nocorr")
        .map(|r| r.nmse)
        .collect();
    assert_eq!(on.len(), 50);
    let success_rate = on.iter().filter(|&&v| v <= 1e-5).count() as f64 / on.len() as f64;
    let med_on = median(on);
    let med_off = median(off);
    let elapsed = started.elapsed().as_secs_f64();
    report(
        3,
        "correlation benefit",
        success_rate >= 0.9 && med_on * 10.0 <= med_off && elapsed < 600.0,
        &format!(
            "success {success_rate:.2}, median on {med_on:.3e} vs off {med_off:.3e} in {elapsed:.0}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// 4 and 5. noisy regime and speed ordering (shared run)
// ---------------------------------------------------------------------------

fn noisy_regime_records() -> &'static [TrialRecord] {
    static RECORDS: OnceLock<Vec<TrialRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| {
        let config = NoiseConfig {
            snr_grid: vec![15.0],
            trials: 25,
            algorithms: vec![
                Algorithm::BsblEm {
                    learn_correlation: true,
                },
                Algorithm::BsblBo {
                    learn_correlation: true,
                },
                Algorithm::GroupLasso,
                Algorithm::OracleLs,
            ],
            master_seed: MASTER_SEED,
            ..NoiseConfig::default()
        };
        run_noise_sweep(&config).unwrap()
    })
}

fn nmse_of(records: &[TrialRecord], algo: &str) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.algorithm == algo)
        .map(|r| r.nmse)
        .collect()
}

#[test]
fn criterion_4_noisy_regime() {
    let started = Instant::now();
    let records = noisy_regime_records();
    let em = median(nmse_of(records, "bsbl-em"));
    let bo = median(nmse_of(records, "bsbl-bo"));
    let gl = median(nmse_of(records, "group-lasso"));
    let orc = median(nmse_of(records, "oracle"));
    let elapsed = started.elapsed().as_secs_f64();
    let pass = em <= 2.0 * orc && bo <= 1.5 * em && gl > em && gl > bo && elapsed < 900.0;
    report(
        4,
        "noisy regime",
        pass,
        &format!(
            "median nmse: em {em:.3e} ({}x oracle), bo {bo:.3e} ({}x em), gl {gl:.3e}, oracle {orc:.3e} in {elapsed:.0}s",
            format_args!("{:.2}", em / orc),
            format_args!("{:.2}", bo / em)
        ),
    );
}

#[test]
fn criterion_5_speed_ordering() {
    let records = noisy_regime_records();
    let em_iters: Vec<f64> = records
        .iter()
        .filter(|r| r.algorithm == "bsbl-em")
        .map(|r| r.iterations as f64)
        .collect();
    let bo_iters: Vec<f64> = records
        .iter()
        .filter(|r| r.algorithm == "bsbl-bo")
        .map(|r| r.iterations as f64)
        .collect();
    let em_med = median(em_iters);
    let bo_med = median(bo_iters);
    report(
        5,
        "speed ordering",
        bo_med < em_med,
        &format!("median iterations: bo {bo_med} vs em {em_med}"),
    );
}

// ---------------------------------------------------------------------------
// 6. expanded-model window-size insensitivity
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_ebsbl_insensitivity() {
    let started = Instant::now();
    let algos = [
        Algorithm::EbsblBo { h: 4 },
        Algorithm::EbsblBo { h: 8 },
        Algorithm::GroupLasso,
    ];
    let rows: Vec<Vec<f64>> = (0..25u64)
        .into_par_iter()
        .map(|trial| {
            let g0 = 2 + (trial as usize % 9);
            let seed = derive_seed(MASTER_SEED, "acceptance-unknown", g0 as u64, trial);
            let synth =
                synth_unknown_partition(192, 512, 48, g0, (0.8, 1.0), 15.0, seed).unwrap();
            algos
                .iter()
                .map(|a| {
                    let out = a.run(&synth).unwrap();
                    bsbl_core::experiments::nmse(&out.x_hat, &synth.x_gen)
                })
                .collect()
        })
        .collect();
    let h4 = median(rows.iter().map(|r| r[0]).collect());
    let h8 = median(rows.iter().map(|r| r[1]).collect());
    let gl = median(rows.iter().map(|r| r[2]).collect());
    let ratio = h4.max(h8) / h4.min(h8);
    let elapsed = started.elapsed().as_secs_f64();
    report(
        6,
        "ebsbl window insensitivity",
        ratio <= 1.5 && h4 <= gl && h8 <= gl,
        &format!(
            "median nmse h4 {h4:.3e}, h8 {h8:.3e} (ratio {ratio:.2}), group-lasso {gl:.3e} in {elapsed:.0}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. reductions
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_reductions() {
    // (a) window size 1 expanded solver is bitwise the all-scalar solver
    let spec = GenSpec {
        m: 16,
        n: 32,
        partition: BlockPartition::uniform(8, 4).unwrap(),
        k_active: 2,
        intra_corr: IntraCorr::Fixed(0.9),
        normalize_blocks: false,
        snr_db: Some(20.0),
        seed: derive_seed(MASTER_SEED, "acceptance-reduction", 0, 0),
    };
    let synth = synthesize(&spec).unwrap();
    let lam = bsbl_core::scaled_noisy_lambda_init(synth.problem.y());
    let cfg = EmConfig::noisy(lam);
    let expanded = solve_ebsbl(&synth.problem, 1, &SolverChoice::Em(cfg)).unwrap();
    let scalar_partition = BlockPartition::uniform(synth.problem.n(), 1).unwrap();
    let direct = solve_em(&synth.problem, &scalar_partition, &cfg).unwrap();
    let scalar_ok = expanded.x_hat == direct.x_hat
        && expanded.cost_trace == direct.cost_trace
        && expanded.iterations == direct.iterations;

    // (b) identity correlation, unit weights, one outer iteration collapses
    // the hybrid to a plain group lasso
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
        MASTER_SEED,
        "acceptance-reduction",
        1,
        0,
    ));
    let partition = BlockPartition::uniform(5, 3).unwrap();
    let phi = random_dense(10, 15, &mut rng);
    let y = random_vec(10, &mut rng);
    let problem = bsbl_core::Problem::new(y.clone(), phi.clone()).unwrap();
    let reg = 0.4;
    let config = L1Config {
        outer_iters: 1,
        unit_weights: true,
        learn_correlation: false,
        reg_rule: RegRule::UserValue(reg),
        ..L1Config::noiseless()
    };
    let hybrid = solve_l1(&problem, &partition, &config).unwrap();
    let plain = solve_group_lasso(
        &GroupLassoProblem::new(y, phi, partition, reg).unwrap(),
        1e-10,
        20_000,
    );
    let l1_dev = vec_rel_err(&hybrid.x_hat, &plain.u);

    report(
        7,
        "reductions",
        scalar_ok && l1_dev <= 1e-8,
        &format!(
            "scalar-window solver bitwise-equal: {scalar_ok}; hybrid-vs-lasso deviation {l1_dev:.3e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. CLI determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let code = bsbl_cli::run(
            [
                "bsbl",
                "bench",
                "--experiment",
                "correlation",
                "--m",
                "20",
                "--n",
                "60",
                "--k-active",
                "2",
                "--grid",
                "0.0,0.9",
                "--trials",
                "2",
                "--seed",
                "5",
                "--out",
                out.to_str().unwrap(),
            ]
            .into_iter()
            .map(str::to_string),
        );
        assert_eq!(code, 0, "bench run failed");
    }
    let a = std::fs::read(out1.join("results.csv")).unwrap();
    let b = std::fs::read(out2.join("results.csv")).unwrap();
    report(
        8,
        "cli determinism",
        a == b,
        &format!("results.csv byte-identical across two runs ({} bytes)", a.len()),
    );
}

// ---------------------------------------------------------------------------
// 9. phase-transition sanity
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_phase_transition_sanity() {
    let started = Instant::now();
    // rho = 1.0 is not part of the gate; it is measured alongside to show
    // where the correlation-driven separation sits at this problem size.
    let base = PhaseConfig {
        n: 200,
        block_size: 10,
        deltas: vec![0.25],
        rhos: vec![0.6, 0.8, 1.0],
        trials: 25,
        algorithms: vec![Algorithm::BsblEm {
            learn_correlation: true,
        }],
        master_seed: MASTER_SEED,
        ..PhaseConfig::default()
    };
    let corr = PhaseConfig {
        intra_corr: IntraCorr::Fixed(0.95),
        ..base.clone()
    };
    let uncorr = PhaseConfig {
        intra_corr: IntraCorr::Fixed(0.0),
        ..base
    };
    let rate = |records: &[TrialRecord], rho: &str| -> f64 {
        let group: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.cell.contains(&format!("rho={rho};")))
            .collect();
        group.iter().filter(|r| r.success).count() as f64 / group.len() as f64
    };
    let with_corr = run_phase_transition(&corr).unwrap();
    let without_corr = run_phase_transition(&uncorr).unwrap();
    let rate_06 = rate(&with_corr, "0.6");
    let rate_08_corr = rate(&with_corr, "0.8");
    let rate_08_uncorr = rate(&without_corr, "0.8");
    let rate_10_corr = rate(&with_corr, "1");
    let rate_10_uncorr = rate(&without_corr, "1");
    let elapsed = started.elapsed().as_secs_f64();
    let pass =
        rate_06 >= 0.9 && rate_08_corr - rate_08_uncorr >= 0.2 && elapsed < 900.0;
    report(
        9,
        "phase-transition sanity",
        pass,
        &format!(
            "success at rho=0.6: {rate_06:.2}; at rho=0.8: corr {rate_08_corr:.2} vs uncorr \
             {rate_08_uncorr:.2} (separation gate >= 0.2); supplementary rho=1.0: corr \
             {rate_10_corr:.2} vs uncorr {rate_10_uncorr:.2}; {elapsed:.0}s"
        ),
    );
}
