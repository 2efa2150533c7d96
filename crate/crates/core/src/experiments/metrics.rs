//! Recovery metrics and the oracle least-squares baseline.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{BsblError, Result};
use crate::linalg::Cholesky;
use crate::model::Problem;

/// A trial succeeds when its NMSE is at or below this threshold.
pub const SUCCESS_NMSE: f64 = 1e-5;

/// `||x_hat - x_gen||^2 / ||x_gen||^2`. Infinite for a nonzero estimate of
/// an identically zero signal.
pub fn nmse(x_hat: &Array1<f64>, x_gen: &Array1<f64>) -> f64 {
    let diff = x_hat - x_gen;
    let num = diff.dot(&diff);
    let den = x_gen.dot(x_gen);
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

pub fn success(nmse: f64) -> bool {
    nmse <= SUCCESS_NMSE
}

/// Least-squares estimate restricted to the true support columns, zero
/// elsewhere. The support columns must be linearly independent.
pub fn oracle_ls(problem: &Problem, support_cols: &[usize]) -> Result<Array1<f64>> {
    let mut x = Array1::<f64>::zeros(problem.n());
    if support_cols.is_empty() {
        return Ok(x);
    }
    let m = problem.m();
    let k = support_cols.len();
    let mut phi_s = Array2::<f64>::zeros((m, k));
    for (j, &col) in support_cols.iter().enumerate() {
        if col >= problem.n() {
            return Err(BsblError::DimensionMismatch(format!(
                "support column {col} out of range"
            )));
        }
        phi_s.column_mut(j).assign(&problem.phi().column(col));
    }
    let gram = phi_s.t().dot(&phi_s);
    let chol = Cholesky::new(&gram).map_err(|_| {
        BsblError::SingularSystem("support columns are linearly dependent".into())
    })?;
    let coeffs = chol.solve_vec(&phi_s.t().dot(problem.y()));
    for (j, &col) in support_cols.iter().enumerate() {
        x[col] = coeffs[j];
    }
    Ok(x)
}

/// One solver run on one synthesized instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    /// Sweep-cell parameters, rendered as `name=value` pairs.
    pub cell: String,
    pub algorithm: String,
    pub seed: u64,
    pub nmse: f64,
    pub success: bool,
    pub iterations: usize,
    pub wall_time_ms: f64,
    pub learned_r: f64,
}
