//! Block-sparse Gaussian measurement model: problem data, block partition,
//! hyperparameters, and the posterior/cost computations shared by all solvers.
//!
//! The signal prior is a zero-mean Gaussian per block with covariance
//! `gamma_i * B_i`; measurements are `y = Phi x + v` with isotropic noise
//! variance `lambda`. All heavy linear algebra runs in the M x M measurement
//! space: the matrix `lambda I + Phi Sigma0 Phi^T` is assembled from active
//! blocks and factorized once per evaluation. The prior precision is never
//! formed, so blocks with `gamma_i = 0` are handled exactly.

use ndarray::{s, Array1, Array2};

use crate::error::{BsblError, Result};
use crate::linalg::{frob_inner, symmetrize, Cholesky};

/// A recovery instance: measurements `y` and sensing matrix `phi`.
#[derive(Debug, Clone)]
pub struct Problem {
    y: Array1<f64>,
    phi: Array2<f64>,
}

impl Problem {
    /// Validates that dimensions agree and no sensing column is identically
    /// zero (a zero column can never be attributed energy by any solver).
    pub fn new(y: Array1<f64>, phi: Array2<f64>) -> Result<Self> {
        if phi.nrows() != y.len() {
            return Err(BsblError::DimensionMismatch(format!(
                "y has length {} but phi has {} rows",
                y.len(),
                phi.nrows()
            )));
        }
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(BsblError::DimensionMismatch(
                "empty measurement or signal dimension".into(),
            ));
        }
        for (j, col) in phi.columns().into_iter().enumerate() {
            if col.iter().all(|&v| v == 0.0) {
                return Err(BsblError::ZeroSensingColumn(j));
            }
        }
        Ok(Self { y, phi })
    }

    pub fn m(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn phi(&self) -> &Array2<f64> {
        &self.phi
    }

    /// The sensing sub-matrix for block `i` of `partition`.
    pub fn phi_block(&self, partition: &BlockPartition, i: usize) -> ndarray::ArrayView2<'_, f64> {
        let r = partition.range(i);
        self.phi.slice(s![.., r.start..r.end])
    }
}

/// An ordered partition of signal indices `0..N` into contiguous blocks.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(BsblError::InvalidConfig("empty block partition".into()));
        }
        if sizes.iter().any(|&d| d == 0) {
            return Err(BsblError::InvalidConfig(
                "block sizes must be positive".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for &d in &sizes {
            acc += d;
            offsets.push(acc);
        }
        Ok(Self { sizes, offsets })
    }

    /// `count` blocks, all of the same `size`.
    pub fn uniform(count: usize, size: usize) -> Result<Self> {
        Self::new(vec![size; count])
    }

    /// Number of blocks.
    pub fn g(&self) -> usize {
        self.sizes.len()
    }

    /// Total signal length covered by the partition.
    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    /// Index range of block `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// True when every block has the same size.
    pub fn is_uniform(&self) -> bool {
        self.sizes.iter().all(|&d| d == self.sizes[0])
    }

    /// Borrow the sub-vector of `x` covered by block `i`.
    pub fn block_of<'a>(&self, x: &'a Array1<f64>, i: usize) -> ndarray::ArrayView1<'a, f64> {
        let r = self.range(i);
        x.slice(s![r.start..r.end])
    }

    pub fn check_against(&self, n: usize) -> Result<()> {
        if self.total() != n {
            return Err(BsblError::DimensionMismatch(format!(
                "partition covers {} indices but signal length is {}",
                self.total(),
                n
            )));
        }
        Ok(())
    }
}

/// Hyperparameters of the block Gaussian prior plus the noise variance.
#[derive(Debug, Clone)]
pub struct Hyperparams {
    /// Per-block variance scales, `gamma_i >= 0`; zero prunes the block.
    pub gamma: Vec<f64>,
    /// Per-block correlation matrices, symmetric positive definite.
    pub b: Vec<Array2<f64>>,
    /// Noise variance, `lambda >= 0` (zero only for exactly solvable systems).
    pub lambda: f64,
}

impl Hyperparams {
    /// Unit scales and identity correlation for every block.
    pub fn init(partition: &BlockPartition, gamma_init: f64, lambda: f64) -> Self {
        let b = partition
            .sizes()
            .iter()
            .map(|&d| Array2::eye(d))
            .collect();
        Self {
            gamma: vec![gamma_init; partition.g()],
            b,
            lambda,
        }
    }

    fn check(&self, partition: &BlockPartition) -> Result<()> {
        if self.gamma.len() != partition.g() || self.b.len() != partition.g() {
            return Err(BsblError::DimensionMismatch(format!(
                "{} gamma / {} B entries for {} blocks",
                self.gamma.len(),
                self.b.len(),
                partition.g()
            )));
        }
        for (i, b) in self.b.iter().enumerate() {
            let d = partition.size(i);
            if b.nrows() != d || b.ncols() != d {
                return Err(BsblError::DimensionMismatch(format!(
                    "B[{i}] is {}x{} but block size is {d}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(BsblError::InvalidConfig(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Gaussian posterior summary: mean, per-block covariance diagonal blocks,
/// and the marginal-likelihood cost at the producing hyperparameters.
///
/// Only the principal diagonal blocks of the posterior covariance are kept;
/// no learning rule in this crate consumes the cross-block entries, and the
/// one rule that needs full-covariance traces evaluates them in measurement
/// space instead.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    pub mu: Array1<f64>,
    pub sigma_blocks: Vec<Array2<f64>>,
    pub cost: f64,
}

/// Outcome of one solver invocation.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub x_hat: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub cost_trace: Vec<f64>,
    /// AR(1) coefficient learned for the intra-block correlation (0 when
    /// correlation learning is off).
    pub learned_r: f64,
}

/// Posterior plus the measurement-space factors it was derived from, so that
/// callers inside one solver iteration can reuse the factorization.
pub(crate) struct PosteriorFactors {
    pub state: PosteriorState,
    /// Cholesky factor of `lambda I + Phi Sigma0 Phi^T`.
    pub chol: Cholesky,
    /// `Phi Sigma0 Phi^T` (needed by the full-covariance noise rule).
    pub c: Array2<f64>,
}

pub(crate) fn posterior_factors(
    problem: &Problem,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> Result<PosteriorFactors> {
    partition.check_against(problem.n())?;
    hp.check(partition)?;
    let m = problem.m();
    let g = partition.g();

    // Verify PD of every active correlation matrix up front: a bad B_i can
    // still produce a factorizable measurement covariance.
    for i in 0..g {
        if hp.gamma[i] > 0.0 {
            Cholesky::new(&hp.b[i])
                .map_err(|_| BsblError::NonPsd(format!("correlation matrix B[{i}]")))?;
        }
    }

    // P holds Phi^i (gamma_i B_i) in the columns of each active block.
    let mut p = Array2::<f64>::zeros((m, problem.n()));
    for i in 0..g {
        if hp.gamma[i] == 0.0 {
            continue;
        }
        let phi_i = problem.phi_block(partition, i);
        let scaled = phi_i.dot(&hp.b[i].mapv(|v| v * hp.gamma[i]));
        let r = partition.range(i);
        p.slice_mut(s![.., r.start..r.end]).assign(&scaled);
    }

    // C = Phi Sigma0 Phi^T accumulated block by block.
    let mut c = Array2::<f64>::zeros((m, m));
    for i in 0..g {
        if hp.gamma[i] == 0.0 {
            continue;
        }
        let r = partition.range(i);
        let p_i = p.slice(s![.., r.start..r.end]);
        let phi_i = problem.phi_block(partition, i);
        c = c + p_i.dot(&phi_i.t());
    }
    symmetrize(&mut c);

    let mut sigma_y = c.clone();
    for i in 0..m {
        sigma_y[(i, i)] += hp.lambda;
    }
    let chol = Cholesky::new(&sigma_y).map_err(|e| {
        if hp.lambda == 0.0 {
            BsblError::SingularSystem(
                "lambda = 0 and Phi Sigma0 Phi^T is rank deficient".into(),
            )
        } else {
            e
        }
    })?;

    let siginv_y = chol.solve_vec(problem.y());
    let cost = chol.logdet() + problem.y().dot(&siginv_y);

    let mut mu = Array1::<f64>::zeros(problem.n());
    let mut sigma_blocks = Vec::with_capacity(g);
    for i in 0..g {
        let d = partition.size(i);
        if hp.gamma[i] == 0.0 {
            sigma_blocks.push(Array2::zeros((d, d)));
            continue;
        }
        let r = partition.range(i);
        let p_i = p.slice(s![.., r.start..r.end]);
        mu.slice_mut(s![r.start..r.end])
            .assign(&p_i.t().dot(&siginv_y));
        let q_i = chol.solve_mat(&p_i.to_owned());
        let mut sig = hp.b[i].mapv(|v| v * hp.gamma[i]) - p_i.t().dot(&q_i);
        symmetrize(&mut sig);
        sigma_blocks.push(sig);
    }

    Ok(PosteriorFactors {
        state: PosteriorState {
            mu,
            sigma_blocks,
            cost,
        },
        chol,
        c,
    })
}

/// Posterior mean, per-block covariance blocks, and cost for the given
/// hyperparameters.
///
/// All computation uses the M x M measurement covariance; pruned blocks
/// (`gamma_i = 0`) produce exactly zero mean and covariance blocks. With
/// `lambda = 0` the measurement covariance must be full rank, otherwise
/// `SingularSystem` is returned.
pub fn compute_posterior(
    problem: &Problem,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> Result<PosteriorState> {
    Ok(posterior_factors(problem, partition, hp)?.state)
}

/// Marginal-likelihood cost `log|lambda I + Phi Sigma0 Phi^T| +
/// y^T (lambda I + Phi Sigma0 Phi^T)^{-1} y`.
pub fn cost_function(
    problem: &Problem,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> Result<f64> {
    if hp.lambda <= 0.0 {
        return Err(BsblError::InvalidConfig(
            "cost function requires lambda > 0".into(),
        ));
    }
    Ok(posterior_factors(problem, partition, hp)?.state.cost)
}

/// The MAP signal estimate is the posterior mean.
pub fn map_estimate(posterior: &PosteriorState) -> Array1<f64> {
    posterior.mu.clone()
}

/// `Tr(Phi^i^T (lambda I + Phi Sigma0 Phi^T)^{-1} Phi^i B_i)` for every
/// block, reusing one factorization. Shared by the bound-optimization
/// denominator and the dual-weight rule.
pub(crate) fn trace_phit_siginv_phi_b(
    problem: &Problem,
    partition: &BlockPartition,
    chol: &Cholesky,
    b: &[Array2<f64>],
) -> Vec<f64> {
    (0..partition.g())
        .map(|i| {
            let phi_i = problem.phi_block(partition, i).to_owned();
            let x = chol.solve_mat(&phi_i);
            let gram = phi_i.t().dot(&x);
            frob_inner(&gram, &b[i])
        })
        .collect()
}
