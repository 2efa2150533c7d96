//! Expanded model for unknown block partitions: the signal is written as an
//! overlap-add of all `p = N - h + 1` sliding windows of a fixed size `h`,
//! which turns the overlapping-block prior into an ordinary block-sparse
//! model of dimension `p * h` that any of the three solvers can handle.

use ndarray::{s, Array1, Array2};

use crate::bo::{solve_bo, BoConfig};
use crate::em::{solve_em, EmConfig};
use crate::error::{BsblError, Result};
use crate::l1::{solve_l1, L1Config};
use crate::model::{BlockPartition, Problem, RecoveryResult};

/// Sliding-window expansion of a recovery problem.
///
/// Column block `i` of the expanded sensing matrix is the window
/// `phi[:, i..i+h]`; the expanded coefficient vector `z` has `p` blocks of
/// size `h`, and the signal is recovered by overlap-adding those blocks.
#[derive(Debug, Clone)]
pub struct ExpandedModel {
    h: usize,
    n: usize,
    a: Array2<f64>,
    partition: BlockPartition,
}

impl ExpandedModel {
    pub fn h(&self) -> usize {
        self.h
    }

    /// Number of candidate windows.
    pub fn p(&self) -> usize {
        self.n - self.h + 1
    }

    /// Original signal length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The materialized expanded sensing matrix, M x (p*h).
    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    /// `A z` evaluated through the window recipe: overlap-add `z` into the
    /// signal space, then apply the original sensing matrix. Identical to
    /// the dense product by construction of `A`, at a factor `h` fewer
    /// operations.
    pub fn matvec(&self, phi: &Array2<f64>, z: &Array1<f64>) -> Result<Array1<f64>> {
        Ok(phi.dot(&reconstruct(z, self.h, self.n)?))
    }
}

/// Build the expanded model for window size `h` (`1 <= h <= N`).
pub fn expand(problem: &Problem, h: usize) -> Result<ExpandedModel> {
    let n = problem.n();
    if h == 0 || h > n {
        return Err(BsblError::InvalidBlockSize { h, n });
    }
    let p = n - h + 1;
    let m = problem.m();
    let mut a = Array2::<f64>::zeros((m, p * h));
    for i in 0..p {
        let window = problem.phi().slice(s![.., i..i + h]);
        a.slice_mut(s![.., i * h..(i + 1) * h]).assign(&window);
    }
    Ok(ExpandedModel {
        h,
        n,
        a,
        partition: BlockPartition::uniform(p, h)?,
    })
}

/// Overlap-add: `x_j = sum over windows i covering j of z[i*h + (j - i)]`.
pub fn reconstruct(z: &Array1<f64>, h: usize, n: usize) -> Result<Array1<f64>> {
    if h == 0 || h > n {
        return Err(BsblError::InvalidBlockSize { h, n });
    }
    let p = n - h + 1;
    if z.len() != p * h {
        return Err(BsblError::DimensionMismatch(format!(
            "expanded vector has length {} but p*h = {}",
            z.len(),
            p * h
        )));
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in 0..p {
        for k in 0..h {
            x[i + k] += z[i * h + k];
        }
    }
    Ok(x)
}

/// Which solver runs on the expanded model, with its configuration.
#[derive(Debug, Clone)]
pub enum SolverChoice {
    Em(EmConfig),
    Bo(BoConfig),
    L1(L1Config),
}

/// Recover a signal with unknown block partition: expand with window size
/// `h`, solve the expanded block-sparse problem, and overlap-add the
/// result. All reported diagnostics come from the inner solve; `x_hat` is
/// the reconstructed signal of length N.
pub fn solve_ebsbl(
    problem: &Problem,
    h: usize,
    choice: &SolverChoice,
) -> Result<RecoveryResult> {
    let model = expand(problem, h)?;
    let expanded = Problem::new(problem.y().clone(), model.a().clone())?;
    let inner = match choice {
        SolverChoice::Em(cfg) => solve_em(&expanded, model.partition(), cfg)?,
        SolverChoice::Bo(cfg) => solve_bo(&expanded, model.partition(), cfg)?,
        SolverChoice::L1(cfg) => solve_l1(&expanded, model.partition(), cfg)?,
    };
    let x_hat = reconstruct(&inner.x_hat, h, problem.n())?;
    Ok(RecoveryResult { x_hat, ..inner })
}
