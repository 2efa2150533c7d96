//! Iteration machinery shared by the EM and bound-optimization solvers:
//! pruning, convergence bookkeeping, and the per-iteration update order
//! (posterior, gamma, correlation, noise). Keeping one skeleton makes the
//! iteration counts of the two solvers directly comparable.

use ndarray::Array1;

use crate::correlation::ArCoefficient;
use crate::em;
use crate::error::Result;
use crate::model::{posterior_factors, BlockPartition, Hyperparams, Problem, RecoveryResult};

/// Smallest noise variance ever fed to a factorization.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// How the noise variance evolves across iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaLearning {
    /// Keep lambda fixed at its initial value (noiseless mode).
    Off,
    /// Per-block trace rule that drops cross-block covariance terms;
    /// preferred in noisy regimes.
    Robust,
    /// Full-covariance trace rule; provided for ablation.
    Naive,
}

/// Data-scaled default for the initial noise variance in noisy runs:
/// one percent of the per-measurement signal power.
pub fn scaled_noisy_lambda_init(y: &Array1<f64>) -> f64 {
    let m = y.len().max(1) as f64;
    (0.01 * y.dot(y) / m).max(LAMBDA_FLOOR)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IterationSettings {
    pub max_iters: usize,
    pub tol: f64,
    pub prune_gamma: f64,
    pub lambda_learning: LambdaLearning,
    pub learn_correlation: bool,
    pub lambda_init: f64,
    pub gamma_init: f64,
}

impl IterationSettings {
    pub fn validate(&self) -> Result<()> {
        use crate::error::BsblError::InvalidConfig;
        if self.max_iters < 1 {
            return Err(InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(InvalidConfig("tol must be > 0".into()));
        }
        if self.prune_gamma < 0.0 {
            return Err(InvalidConfig("prune_gamma must be >= 0".into()));
        }
        if !(self.lambda_init > 0.0) {
            return Err(InvalidConfig("lambda_init must be > 0".into()));
        }
        if !(self.gamma_init > 0.0) {
            return Err(InvalidConfig("gamma_init must be > 0".into()));
        }
        Ok(())
    }
}

pub(crate) enum GammaRule {
    Em,
    Bo,
}

pub(crate) fn run(
    problem: &Problem,
    partition: &BlockPartition,
    settings: &IterationSettings,
    rule: GammaRule,
) -> Result<RecoveryResult> {
    settings.validate()?;
    let mut hp = Hyperparams::init(partition, settings.gamma_init, settings.lambda_init);
    let mut cost_trace = Vec::new();
    let mut learned_r = ArCoefficient::zero();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=settings.max_iters {
        iterations = iter;
        let factors = posterior_factors(problem, partition, &hp)?;
        cost_trace.push(factors.state.cost);

        let mut new_gamma = match rule {
            GammaRule::Em => em::update_gamma_em(&factors.state, &hp, partition)?,
            GammaRule::Bo => crate::bo::gamma_bo_from_factors(problem, partition, &hp, &factors)?,
        };

        // Relative pruning, re-evaluated every iteration. A pruned block has
        // zero posterior moments, so both gamma rules keep it at exactly
        // zero afterwards: pruned blocks never revive.
        let gmax = new_gamma.iter().cloned().fold(0.0f64, f64::max);
        let threshold = settings.prune_gamma * gmax;
        for gi in new_gamma.iter_mut() {
            if *gi < threshold {
                *gi = 0.0;
            }
        }

        let delta = hp
            .gamma
            .iter()
            .zip(new_gamma.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        hp.gamma = new_gamma;

        if gmax == 0.0 {
            // Everything pruned; the estimate is identically zero.
            converged = true;
            break;
        }
        if delta / gmax < settings.tol {
            converged = true;
            break;
        }

        // The first posterior is always evaluated under identity correlation
        // so that B is never estimated from the initialization.
        if settings.learn_correlation && iter >= 2 {
            match em::update_correlation(
                &factors.state,
                &hp.gamma,
                partition,
                partition.is_uniform(),
            ) {
                Ok(update) => {
                    hp.b = update.b;
                    learned_r = update.r;
                }
                Err(crate::error::BsblError::NoActiveBlocks) => {}
                Err(e) => return Err(e),
            }
        }

        match settings.lambda_learning {
            LambdaLearning::Off => {}
            LambdaLearning::Robust => {
                hp.lambda =
                    em::update_lambda_robust(problem, &factors.state, partition).max(LAMBDA_FLOOR);
            }
            LambdaLearning::Naive => {
                hp.lambda = em::naive_lambda_from_factors(problem, &factors).max(LAMBDA_FLOOR);
            }
        }
    }

    // One final posterior under the converged hyperparameters; pruned blocks
    // come out exactly zero.
    let post = posterior_factors(problem, partition, &hp)?.state;
    Ok(RecoveryResult {
        x_hat: post.mu,
        iterations,
        converged,
        cost_trace,
        learned_r: learned_r.value(),
    })
}
