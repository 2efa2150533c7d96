//! Naive dense reference implementations used as independent oracles.
//!
//! Everything here deliberately avoids the crate's linear-algebra paths:
//! systems are solved by LU with partial pivoting on dense N x N matrices,
//! matrix square roots by Denman-Beavers iteration, and every update rule is
//! transcribed directly from its closed form, materializing the full
//! covariances the production code avoids.

#![allow(dead_code)]

use bsbl_core::model::{BlockPartition, Hyperparams, Problem};
use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// ---------------------------------------------------------------------------
// dense LU kernel
// ---------------------------------------------------------------------------

pub struct Lu {
    lu: Array2<f64>,
    perm: Vec<usize>,
    sign: f64,
}

pub fn lu_decompose(a: &Array2<f64>) -> Lu {
    let n = a.nrows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let mut pivot = k;
        for i in k + 1..n {
            if lu[(i, k)].abs() > lu[(pivot, k)].abs() {
                pivot = i;
            }
        }
        if pivot != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
            }
            perm.swap(k, pivot);
            sign = -sign;
        }
        let pk = lu[(k, k)];
        assert!(pk != 0.0, "singular matrix in LU oracle");
        for i in k + 1..n {
            let f = lu[(i, k)] / pk;
            lu[(i, k)] = f;
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }
    Lu { lu, perm, sign }
}

impl Lu {
    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.lu.nrows();
        let mut x = Array1::<f64>::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            for k in 0..i {
                let f = self.lu[(i, k)] * x[k];
                x[i] -= f;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu[(i, k)] * x[k];
                x[i] -= f;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn logdet(&self) -> f64 {
        let mut sign = self.sign;
        for i in 0..self.lu.nrows() {
            sign *= self.lu[(i, i)].signum();
        }
        assert!(sign > 0.0, "negative determinant in logdet oracle");
        (0..self.lu.nrows()).map(|i| self.lu[(i, i)].abs().ln()).sum()
    }
}

pub fn dense_solve_mat(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let lu = lu_decompose(a);
    let mut out = Array2::<f64>::zeros(b.dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        out.column_mut(j).assign(&lu.solve(&col.to_owned()));
    }
    out
}

pub fn dense_inverse(a: &Array2<f64>) -> Array2<f64> {
    dense_solve_mat(a, &Array2::eye(a.nrows()))
}

/// Principal square root of an SPD matrix by Denman-Beavers iteration.
pub fn dense_sqrt(a: &Array2<f64>) -> Array2<f64> {
    let mut y = a.clone();
    let mut z: Array2<f64> = Array2::eye(a.nrows());
    for _ in 0..100 {
        let yi = dense_inverse(&y);
        let zi = dense_inverse(&z);
        let y_next = (&y + &zi).mapv(|v| 0.5 * v);
        let z_next = (&z + &yi).mapv(|v| 0.5 * v);
        let diff: f64 = (&y_next - &y).iter().map(|v| v.abs()).sum();
        let scale: f64 = y.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
        y = y_next;
        z = z_next;
        if diff / scale < 1e-16 {
            break;
        }
    }
    y
}

// ---------------------------------------------------------------------------
// dense model quantities
// ---------------------------------------------------------------------------

/// Block-diagonal prior covariance, materialized N x N.
pub fn dense_sigma0(partition: &BlockPartition, hp: &Hyperparams) -> Array2<f64> {
    let n = partition.total();
    let mut s0 = Array2::<f64>::zeros((n, n));
    for i in 0..partition.g() {
        let r = partition.range(i);
        for (a, ia) in r.clone().enumerate() {
            for (b, ib) in r.clone().enumerate() {
                s0[(ia, ib)] = hp.gamma[i] * hp.b[i][(a, b)];
            }
        }
    }
    s0
}

pub struct DensePosterior {
    pub mu: Array1<f64>,
    /// Full N x N posterior covariance.
    pub sigma: Array2<f64>,
    pub cost: f64,
    pub sigma_y: Array2<f64>,
}

/// Posterior by the direct dense formulas.
pub fn dense_posterior(
    problem: &Problem,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> DensePosterior {
    let m = problem.m();
    let s0 = dense_sigma0(partition, hp);
    let phi = problem.phi();
    let mut sigma_y = phi.dot(&s0).dot(&phi.t());
    for i in 0..m {
        sigma_y[(i, i)] += hp.lambda;
    }
    let lu = lu_decompose(&sigma_y);
    let siginv_y = {
        let mut out = Array2::<f64>::zeros((m, m));
        for j in 0..m {
            let mut e = Array1::<f64>::zeros(m);
            e[j] = 1.0;
            out.column_mut(j).assign(&lu.solve(&e));
        }
        out
    };
    let mu = s0.dot(&phi.t()).dot(&siginv_y).dot(problem.y());
    let sigma = &s0 - &s0.dot(&phi.t()).dot(&siginv_y).dot(phi).dot(&s0);
    let cost = lu.logdet() + problem.y().dot(&lu.solve(problem.y()));
    DensePosterior {
        mu,
        sigma,
        cost,
        sigma_y,
    }
}

pub fn sigma_block(post: &DensePosterior, partition: &BlockPartition, i: usize) -> Array2<f64> {
    let r = partition.range(i);
    post.sigma.slice(s![r.start..r.end, r.start..r.end]).to_owned()
}

fn second_moment(post: &DensePosterior, partition: &BlockPartition, i: usize) -> Array2<f64> {
    let r = partition.range(i);
    let mu_i = post.mu.slice(s![r.start..r.end]);
    let mut s = sigma_block(post, partition, i);
    for a in 0..r.len() {
        for b in 0..r.len() {
            s[(a, b)] += mu_i[a] * mu_i[b];
        }
    }
    s
}

// ---------------------------------------------------------------------------
// naive update rules
// ---------------------------------------------------------------------------

/// `gamma_i = Tr(B_i^{-1} (Sigma^i + mu^i mu^i^T)) / d_i`.
pub fn naive_gamma_em(
    post: &DensePosterior,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> Vec<f64> {
    (0..partition.g())
        .map(|i| {
            let s = second_moment(post, partition, i);
            let binv = dense_inverse(&hp.b[i]);
            let prod = binv.dot(&s);
            prod.diag().sum() / partition.size(i) as f64
        })
        .collect()
}

/// Full-covariance noise rule using the materialized N x N posterior.
pub fn naive_lambda_full(problem: &Problem, post: &DensePosterior) -> f64 {
    let resid = problem.y() - &problem.phi().dot(&post.mu);
    let gram = problem.phi().t().dot(problem.phi());
    let trace = post.sigma.dot(&gram).diag().sum();
    (resid.dot(&resid) + trace) / problem.m() as f64
}

/// Per-block noise rule.
pub fn naive_lambda_robust(
    problem: &Problem,
    post: &DensePosterior,
    partition: &BlockPartition,
) -> f64 {
    let resid = problem.y() - &problem.phi().dot(&post.mu);
    let mut acc = resid.dot(&resid);
    for i in 0..partition.g() {
        let phi_i = problem.phi_block(partition, i);
        let gram = phi_i.t().dot(&phi_i);
        acc += sigma_block(post, partition, i).dot(&gram).diag().sum();
    }
    acc / problem.m() as f64
}

pub fn clip_r(raw: f64) -> f64 {
    if !raw.is_finite() {
        0.0
    } else {
        raw.signum() * raw.abs().min(0.99)
    }
}

pub fn naive_toeplitz(r: f64, d: usize) -> Array2<f64> {
    let mut t = Array2::<f64>::zeros((d, d));
    for a in 0..d {
        for b in 0..d {
            t[(a, b)] = r.powi(a.abs_diff(b) as i32);
        }
    }
    t
}

fn diag_means(b: &Array2<f64>) -> (f64, f64) {
    let d = b.nrows();
    let m0 = b.diag().sum() / d as f64;
    let m1 = if d >= 2 {
        (0..d - 1).map(|j| b[(j + 1, j)]).sum::<f64>() / (d - 1) as f64
    } else {
        0.0
    };
    (m0, m1)
}

/// Correlation re-estimation: averaged statistics then AR(1) projection for
/// equal block sizes, pooled diagonal means otherwise. Returns the new
/// matrices and the coefficient.
pub fn naive_b_update(
    post: &DensePosterior,
    partition: &BlockPartition,
    gamma: &[f64],
    equal_sizes: bool,
) -> (Vec<Array2<f64>>, f64) {
    let active: Vec<usize> = (0..partition.g()).filter(|&i| gamma[i] > 0.0).collect();
    assert!(!active.is_empty());
    let r = if equal_sizes {
        let d = partition.size(0);
        let mut avg = Array2::<f64>::zeros((d, d));
        for &i in &active {
            avg = avg + second_moment(post, partition, i).mapv(|v| v / gamma[i]);
        }
        avg.mapv_inplace(|v| v / active.len() as f64);
        let (m0, m1) = diag_means(&avg);
        if m0 == 0.0 {
            0.0
        } else {
            clip_r(m1 / m0)
        }
    } else {
        let mut sum0 = 0.0;
        let mut sum1 = 0.0;
        for &i in &active {
            if partition.size(i) < 2 {
                continue;
            }
            let bi = second_moment(post, partition, i).mapv(|v| v / gamma[i]);
            let (m0, m1) = diag_means(&bi);
            sum0 += m0;
            sum1 += m1;
        }
        if sum0 == 0.0 {
            0.0
        } else {
            clip_r(sum1 / sum0)
        }
    };
    let b = partition
        .sizes()
        .iter()
        .map(|&d| naive_toeplitz(r, d))
        .collect();
    (b, r)
}

/// `gamma_i = sqrt( mu_i^T B_i^{-1} mu_i / Tr(Phi_i^T S_y^{-1} Phi_i B_i) )`.
pub fn naive_gamma_bo(
    problem: &Problem,
    post: &DensePosterior,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> Vec<f64> {
    let siginv_y = dense_inverse(&post.sigma_y);
    (0..partition.g())
        .map(|i| {
            let r = partition.range(i);
            let mu_i = post.mu.slice(s![r.start..r.end]).to_owned();
            let binv = dense_inverse(&hp.b[i]);
            let num = mu_i.dot(&binv.dot(&mu_i));
            let phi_i = problem.phi_block(partition, i);
            let den = phi_i
                .t()
                .dot(&siginv_y)
                .dot(&phi_i)
                .dot(&hp.b[i])
                .diag()
                .sum();
            (num / den).sqrt()
        })
        .collect()
}

/// `z_i = Tr(B_i Phi_i^T S_y^{-1} Phi_i)`, `w_i = 2 sqrt(z_i)`.
pub fn naive_weights(
    problem: &Problem,
    partition: &BlockPartition,
    hp: &Hyperparams,
) -> (Vec<f64>, Vec<f64>) {
    let post = dense_posterior(problem, partition, hp);
    let siginv_y = dense_inverse(&post.sigma_y);
    let z: Vec<f64> = (0..partition.g())
        .map(|i| {
            let phi_i = problem.phi_block(partition, i);
            hp.b[i]
                .dot(&phi_i.t().dot(&siginv_y).dot(&phi_i))
                .diag()
                .sum()
        })
        .collect();
    let w = z.iter().map(|&zi| 2.0 * zi.sqrt()).collect();
    (z, w)
}

/// The transformed dictionary `H = Phi diag(B_i^{1/2} / w_i)` with square
/// roots from Denman-Beavers iteration.
pub fn naive_inner_h(
    problem: &Problem,
    partition: &BlockPartition,
    b_list: &[Array2<f64>],
    w: &[f64],
) -> Array2<f64> {
    let mut h = Array2::<f64>::zeros((problem.m(), problem.n()));
    for i in 0..partition.g() {
        let root = dense_sqrt(&b_list[i]).mapv(|v| v / w[i]);
        let phi_i = problem.phi_block(partition, i);
        let r = partition.range(i);
        h.slice_mut(s![.., r.start..r.end]).assign(&phi_i.dot(&root));
    }
    h
}

// ---------------------------------------------------------------------------
// random instances
// ---------------------------------------------------------------------------

pub fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut g = Array2::<f64>::zeros((d, d));
    for v in g.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let mut spd = g.dot(&g.t());
    for i in 0..d {
        spd[(i, i)] += d as f64;
    }
    spd
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let mut v = Array1::<f64>::zeros(n);
    for e in v.iter_mut() {
        *e = rng.sample(StandardNormal);
    }
    v
}

pub fn random_dense(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut a = Array2::<f64>::zeros((m, n));
    for v in a.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    a
}

/// A random well-conditioned small instance: `M <= 10`, `N <= 20`, all
/// blocks active with moderate gamma, SPD correlation matrices, and a
/// mid-range noise floor.
pub fn random_instance(
    seed: u64,
    equal_sizes: bool,
) -> (Problem, BlockPartition, Hyperparams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (partition, n) = if equal_sizes {
        let d = *[1usize, 2, 4].get(rng.random_range(0..3)).unwrap();
        let g = rng.random_range(2..=(20 / d).min(6));
        (BlockPartition::uniform(g, d).unwrap(), g * d)
    } else {
        let g = rng.random_range(2..=5);
        let mut sizes = Vec::with_capacity(g);
        let mut total = 0;
        for _ in 0..g {
            let d = rng.random_range(1..=4);
            sizes.push(d);
            total += d;
        }
        (BlockPartition::new(sizes).unwrap(), total)
    };
    let m = rng.random_range(4..=10.min(n.max(4)));
    let phi = random_dense(m, n, &mut rng);
    let y = random_vec(m, &mut rng);
    let problem = Problem::new(y, phi).unwrap();
    let gamma: Vec<f64> = (0..partition.g())
        .map(|_| rng.random_range(0.5..2.0))
        .collect();
    let b: Vec<Array2<f64>> = partition
        .sizes()
        .iter()
        .map(|&d| {
            let raw = random_spd(d, &mut rng);
            // scale to unit-ish diagonal so conditioning stays moderate
            let scale = raw.diag().sum() / d as f64;
            raw.mapv(|v| v / scale)
        })
        .collect();
    let hp = Hyperparams {
        gamma,
        b,
        lambda: 0.5,
    };
    (problem, partition, hp)
}

// ---------------------------------------------------------------------------
// comparison helpers
// ---------------------------------------------------------------------------

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn max_rel_err_slice(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| rel_err(x, y)).fold(0.0, f64::max)
}

/// Scale-relative matrix deviation: max |a - b| over max |a|.
pub fn mat_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

pub fn vec_rel_err(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}
