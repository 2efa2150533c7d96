//! Expectation-maximization solver for the block-sparse model, with
//! Toeplitz-constrained correlation learning and a choice of noise rules.

use ndarray::Array2;

use crate::correlation::{estimate_r, estimate_r_pooled, toeplitz_ar1, ArCoefficient};
use crate::error::{BsblError, Result};
use crate::linalg::{frob_inner, symmetrize, Cholesky};
use crate::model::{
    posterior_factors, BlockPartition, Hyperparams, PosteriorFactors, PosteriorState, Problem,
    RecoveryResult,
};
use crate::solver::{GammaRule, IterationSettings, LambdaLearning};

/// Configuration for [`solve_em`].
#[derive(Debug, Clone, Copy)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Convergence threshold on the relative change of the gamma vector.
    pub tol: f64,
    /// Blocks with gamma below `prune_gamma * max(gamma)` are pruned.
    pub prune_gamma: f64,
    pub lambda_learning: LambdaLearning,
    pub learn_correlation: bool,
    pub lambda_init: f64,
    pub gamma_init: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl EmConfig {
    /// Noiseless preset: lambda pinned to a tiny value, no noise learning.
    pub fn noiseless() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-8,
            prune_gamma: 1e-3,
            lambda_learning: LambdaLearning::Off,
            learn_correlation: true,
            lambda_init: 1e-10,
            gamma_init: 1.0,
        }
    }

    /// Noisy preset: robust noise rule starting from `lambda_init`.
    /// [`crate::solver::scaled_noisy_lambda_init`] gives a data-scaled start.
    pub fn noisy(lambda_init: f64) -> Self {
        Self {
            lambda_learning: LambdaLearning::Robust,
            lambda_init,
            ..Self::noiseless()
        }
    }

    pub(crate) fn settings(&self) -> IterationSettings {
        IterationSettings {
            max_iters: self.max_iters,
            tol: self.tol,
            prune_gamma: self.prune_gamma,
            lambda_learning: self.lambda_learning,
            learn_correlation: self.learn_correlation,
            lambda_init: self.lambda_init,
            gamma_init: self.gamma_init,
        }
    }
}

/// EM update of the block variance scales:
/// `gamma_i <- Tr(B_i^{-1} (Sigma_x^i + mu_x^i mu_x^i^T)) / d_i`.
///
/// Pruned blocks (zero posterior moments) stay at exactly zero.
pub fn update_gamma_em(
    posterior: &PosteriorState,
    hp: &Hyperparams,
    partition: &BlockPartition,
) -> Result<Vec<f64>> {
    let g = partition.g();
    let mut gamma = vec![0.0; g];
    for i in 0..g {
        if hp.gamma[i] == 0.0 {
            continue;
        }
        let d = partition.size(i);
        let s = second_moment(posterior, partition, i);
        let chol_b = Cholesky::new(&hp.b[i])
            .map_err(|_| BsblError::NonPsd(format!("correlation matrix B[{i}]")))?;
        let x = chol_b.solve_mat(&s);
        gamma[i] = (x.diag().sum() / d as f64).max(0.0);
    }
    Ok(gamma)
}

/// `Sigma_x^i + mu_x^i (mu_x^i)^T` for block `i`.
fn second_moment(
    posterior: &PosteriorState,
    partition: &BlockPartition,
    i: usize,
) -> Array2<f64> {
    let mu_i = partition.block_of(&posterior.mu, i);
    let d = partition.size(i);
    let mut s = posterior.sigma_blocks[i].clone();
    for a in 0..d {
        for b in 0..d {
            s[(a, b)] += mu_i[a] * mu_i[b];
        }
    }
    s
}

/// Noise rule that keeps only per-block covariance traces:
/// `lambda <- (||y - Phi mu||^2 + sum_i Tr(Sigma_x^i Phi_i^T Phi_i)) / M`.
pub fn update_lambda_robust(
    problem: &Problem,
    posterior: &PosteriorState,
    partition: &BlockPartition,
) -> f64 {
    let resid = problem.y() - &problem.phi().dot(&posterior.mu);
    let mut acc = resid.dot(&resid);
    for i in 0..partition.g() {
        let phi_i = problem.phi_block(partition, i);
        let gram = phi_i.t().dot(&phi_i);
        acc += frob_inner(&posterior.sigma_blocks[i], &gram);
    }
    acc / problem.m() as f64
}

/// Full-covariance noise rule:
/// `lambda <- (||y - Phi mu||^2 + Tr(Sigma_x Phi^T Phi)) / M`.
///
/// The full posterior covariance is never materialized: with
/// `C = Phi Sigma0 Phi^T` and `S_y = lambda I + C`, the trace equals
/// `Tr(C) - Tr(C S_y^{-1} C)`, all in measurement space.
pub fn update_lambda_naive(
    problem: &Problem,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> Result<f64> {
    let factors = posterior_factors(problem, partition, hp)?;
    Ok(naive_lambda_from_factors(problem, &factors))
}

pub(crate) fn naive_lambda_from_factors(problem: &Problem, factors: &PosteriorFactors) -> f64 {
    let resid = problem.y() - &problem.phi().dot(&factors.state.mu);
    let solved = factors.chol.solve_mat(&factors.c);
    let trace = factors.c.diag().sum() - frob_inner(&factors.c, &solved);
    (resid.dot(&resid) + trace) / problem.m() as f64
}

/// Result of one correlation-learning step.
pub struct CorrelationUpdate {
    pub b: Vec<Array2<f64>>,
    pub r: ArCoefficient,
}

/// Re-estimate the per-block correlation matrices under the AR(1) Toeplitz
/// constraint.
///
/// Equal-size partitions average the raw per-block statistics into a single
/// matrix before extracting the coefficient; mixed-size partitions estimate
/// a pooled coefficient from per-block diagonal means. Either way every
/// block receives `toeplitz_ar1(r, d_i)`. Only blocks with `gamma_i > 0`
/// contribute statistics; with none left the previous matrices should be
/// kept (`NoActiveBlocks`).
pub fn update_correlation(
    posterior: &PosteriorState,
    gamma: &[f64],
    partition: &BlockPartition,
    equal_sizes: bool,
) -> Result<CorrelationUpdate> {
    let active: Vec<usize> = (0..partition.g()).filter(|&i| gamma[i] > 0.0).collect();
    if active.is_empty() {
        return Err(BsblError::NoActiveBlocks);
    }
    let r = if equal_sizes {
        let d = partition.size(0);
        let mut avg = Array2::<f64>::zeros((d, d));
        for &i in &active {
            let s = second_moment(posterior, partition, i);
            avg = avg + s.mapv(|v| v / gamma[i]);
        }
        avg.mapv_inplace(|v| v / active.len() as f64);
        symmetrize(&mut avg);
        estimate_r(&avg)
    } else {
        let raw: Vec<Array2<f64>> = active
            .iter()
            .map(|&i| second_moment(posterior, partition, i).mapv(|v| v / gamma[i]))
            .collect();
        estimate_r_pooled(&raw)
    };
    let b = partition
        .sizes()
        .iter()
        .map(|&d| toeplitz_ar1(r, d))
        .collect();
    Ok(CorrelationUpdate { b, r })
}

/// Run the EM solver until the gamma vector stabilizes or `max_iters` is hit.
///
/// Each iteration computes the posterior, then updates gamma, the
/// correlation matrices (from the second iteration on), and the noise
/// variance, in that order. The returned estimate is the posterior mean
/// under the final hyperparameters, with pruned blocks exactly zero.
pub fn solve_em(
    problem: &Problem,
    partition: &BlockPartition,
    config: &EmConfig,
) -> Result<RecoveryResult> {
    crate::solver::run(problem, partition, &config.settings(), GammaRule::Em)
}
