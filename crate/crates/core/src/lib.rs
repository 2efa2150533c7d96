//! Block-sparse Bayesian learning (BSBL) toolkit.
//!
//! Recovers block-sparse signals from compressed measurements
//! `y = Phi x + v`, adaptively learning and exploiting the correlation
//! among amplitudes inside each nonzero block. Three solvers share one
//! Gaussian block prior:
//!
//! - [`em::solve_em`]: expectation-maximization updates (BSBL-EM),
//! - [`bo::solve_bo`]: a bound-optimization rule with far fewer iterations
//!   (BSBL-BO),
//! - [`l1::solve_l1`]: an iterative reweighted group-lasso hybrid
//!   (BSBL-L1) built on the in-house [`group_lasso`] solver.
//!
//! When the block partition is unknown, [`ebsbl`] expands the signal into
//! overlapping candidate windows of a fixed size and runs any of the three
//! solvers on the expanded model (EBSBL-EM/BO/L1).
//!
//! The [`experiments`] module provides seeded generators, metrics, an
//! oracle least-squares baseline, and the four benchmark protocols driven
//! by the companion CLI crate.

pub mod bo;
pub mod correlation;
pub mod ebsbl;
pub mod em;
pub mod error;
pub mod experiments;
pub mod group_lasso;
pub mod l1;
pub mod linalg;
pub mod model;
pub mod solver;

pub use error::{BsblError, Result};
pub use model::{
    compute_posterior, cost_function, map_estimate, BlockPartition, Hyperparams, PosteriorState,
    Problem, RecoveryResult,
};
pub use solver::{scaled_noisy_lambda_init, LambdaLearning};
