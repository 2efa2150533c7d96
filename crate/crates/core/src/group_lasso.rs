//! Penalized group-lasso solver: accelerated proximal gradient with
//! backtracking line search, group soft-thresholding, and a monotone
//! safeguard that restarts momentum whenever an extrapolated step would
//! increase the objective.

use ndarray::{Array1, Array2};

use crate::error::{BsblError, Result};
use crate::model::BlockPartition;

/// `min_u ||y - H u||^2 + reg * sum_i ||u_i||_2` over the given partition.
#[derive(Debug, Clone)]
pub struct GroupLassoProblem {
    pub y: Array1<f64>,
    pub h: Array2<f64>,
    pub partition: BlockPartition,
    pub reg: f64,
}

impl GroupLassoProblem {
    pub fn new(y: Array1<f64>, h: Array2<f64>, partition: BlockPartition, reg: f64) -> Result<Self> {
        if h.nrows() != y.len() {
            return Err(BsblError::DimensionMismatch(format!(
                "y has length {} but H has {} rows",
                y.len(),
                h.nrows()
            )));
        }
        partition.check_against(h.ncols())?;
        if !(reg > 0.0) {
            return Err(BsblError::InvalidConfig(format!(
                "group-lasso reg must be > 0, got {reg}"
            )));
        }
        Ok(Self { y, h, partition, reg })
    }

    pub fn objective(&self, u: &Array1<f64>) -> f64 {
        let resid = &self.y - &self.h.dot(u);
        let mut obj = resid.dot(&resid);
        for i in 0..self.partition.g() {
            let ui = self.partition.block_of(u, i);
            obj += self.reg * ui.dot(&ui).sqrt();
        }
        obj
    }

    /// Smallest regularization for which `u = 0` is optimal:
    /// `2 max_i ||H_i^T y||_2`.
    pub fn critical_reg(&self) -> f64 {
        let hty = self.h.t().dot(&self.y);
        (0..self.partition.g())
            .map(|i| {
                let b = self.partition.block_of(&hty, i);
                2.0 * b.dot(&b).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Worst group-wise violation of the stationarity conditions at `u`:
    /// active groups must satisfy `2 H_i^T (y - H u) = reg * u_i / ||u_i||`,
    /// zero groups `||2 H_i^T (y - H u)|| <= reg`.
    pub fn optimality_residual(&self, u: &Array1<f64>) -> f64 {
        let resid = &self.y - &self.h.dot(u);
        let grad = self.h.t().dot(&resid).mapv(|v| 2.0 * v);
        let mut worst = 0.0f64;
        for i in 0..self.partition.g() {
            let gi = self.partition.block_of(&grad, i);
            let ui = self.partition.block_of(u, i);
            let unorm = ui.dot(&ui).sqrt();
            let violation = if unorm > 0.0 {
                let mut v = 0.0;
                for (a, b) in gi.iter().zip(ui.iter()) {
                    let diff = a - self.reg * b / unorm;
                    v += diff * diff;
                }
                v.sqrt()
            } else {
                (gi.dot(&gi).sqrt() - self.reg).max(0.0)
            };
            worst = worst.max(violation);
        }
        worst
    }
}

/// Solver output. `converged = false` means the iteration cap was reached
/// and `u` is the best iterate found.
#[derive(Debug, Clone)]
pub struct GroupLassoSolution {
    pub u: Array1<f64>,
    pub objective: f64,
    /// Objective value after every iteration, starting at the initial point.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Group soft-threshold: each block of `v` is shrunk toward zero by
/// `threshold` in norm, producing exact zeros for small blocks.
fn group_prox(v: &Array1<f64>, partition: &BlockPartition, threshold: f64) -> Array1<f64> {
    let mut out = v.clone();
    for i in 0..partition.g() {
        let r = partition.range(i);
        let norm: f64 = v
            .slice(ndarray::s![r.start..r.end])
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        let scale = if norm > threshold {
            1.0 - threshold / norm
        } else {
            0.0
        };
        for k in r {
            out[k] = v[k] * scale;
        }
    }
    out
}

/// Largest eigenvalue of `H^T H` by power iteration, used to seed the step.
fn gram_spectral_bound(h: &Array2<f64>) -> f64 {
    let n = h.ncols();
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lam = 0.0;
    for _ in 0..30 {
        let w = h.t().dot(&h.dot(&v));
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lam = norm;
        v = w.mapv(|x| x / norm);
    }
    lam
}

/// Solve the group-lasso problem to `tol` (relative objective change or
/// stationarity residual) within `max_iters` iterations.
pub fn solve_group_lasso(
    p: &GroupLassoProblem,
    tol: f64,
    max_iters: usize,
) -> GroupLassoSolution {
    let fit = |u: &Array1<f64>| -> f64 {
        let r = &p.y - &p.h.dot(u);
        r.dot(&r)
    };

    let mut lip = (2.0 * gram_spectral_bound(&p.h)).max(1e-12);
    let mut x = Array1::<f64>::zeros(p.h.ncols());
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut obj_x = p.objective(&x);
    let mut trace = vec![obj_x];
    let mut converged = false;
    let mut iterations = 0;

    // Backtracked proximal step from `point`; returns the candidate once the
    // quadratic majorization holds at the current Lipschitz estimate.
    let step = |point: &Array1<f64>, lip: &mut f64| -> Array1<f64> {
        let f_point = fit(point);
        let resid = &p.h.dot(point) - &p.y;
        let grad = p.h.t().dot(&resid).mapv(|v| 2.0 * v);
        loop {
            let cand = group_prox(
                &(point - &grad.mapv(|v| v / *lip)),
                &p.partition,
                p.reg / *lip,
            );
            let diff = &cand - point;
            let quad = f_point + grad.dot(&diff) + 0.5 * *lip * diff.dot(&diff);
            if fit(&cand) <= quad + 1e-12 * (1.0 + quad.abs()) {
                return cand;
            }
            *lip *= 2.0;
        }
    };

    for iter in 1..=max_iters {
        iterations = iter;
        let mut cand = step(&z, &mut lip);
        let mut obj_cand = p.objective(&cand);

        if obj_cand > obj_x {
            // Extrapolation overshot: restart momentum and take a plain
            // proximal step from x, which cannot increase the objective.
            cand = step(&x, &mut lip);
            obj_cand = p.objective(&cand);
            t = 1.0;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        z = &cand + &(&cand - &x).mapv(|v| beta * v);
        t = t_next;

        let change = (obj_x - obj_cand).abs() / obj_x.abs().max(1.0);
        x = cand;
        obj_x = obj_cand;
        trace.push(obj_x);

        if change < tol || p.optimality_residual(&x) <= tol {
            converged = true;
            break;
        }
    }

    GroupLassoSolution {
        u: x,
        objective: obj_x,
        objective_trace: trace,
        iterations,
        converged,
    }
}
