//! Dense symmetric linear algebra kernels used by the solvers.
//!
//! The matrices involved are small (the measurement dimension M and the block
//! sizes d_i), so an in-house Cholesky factorization and a cyclic Jacobi
//! eigensolver are plenty and avoid an external BLAS/LAPACK dependency.

use ndarray::{Array1, Array2};

use crate::error::{BsblError, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factorize a symmetric positive definite matrix.
    ///
    /// Fails when a pivot is non-positive or not finite, which is the
    /// practical certificate that the input is not (numerically) PD.
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(BsblError::DimensionMismatch(format!(
                "cholesky of {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(BsblError::NonPsd(format!(
                    "pivot {d:.3e} at index {j} during Cholesky"
                )));
            }
            let dj = d.sqrt();
            l[(j, j)] = dj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solve A x = b for one right-hand side.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x = b.clone();
        // forward: L z = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        // backward: L^T x = z
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solve A X = B column by column.
    pub fn solve_mat(&self, b: &Array2<f64>) -> Array2<f64> {
        let n = self.dim();
        assert_eq!(b.nrows(), n, "rhs row count mismatch");
        let mut x = b.clone();
        for mut col in x.columns_mut() {
            for i in 0..n {
                let mut s = col[i];
                for k in 0..i {
                    s -= self.l[(i, k)] * col[k];
                }
                col[i] = s / self.l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)] * col[k];
                }
                col[i] = s / self.l[(i, i)];
            }
        }
        x
    }

    /// log|A| computed from the factor diagonal.
    pub fn logdet(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            acc += self.l[(i, i)].ln();
        }
        2.0 * acc
    }

    /// A^{-1} as a dense matrix (intended for small d x d blocks).
    pub fn inverse(&self) -> Array2<f64> {
        self.solve_mat(&Array2::eye(self.dim()))
    }
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns `(values, vectors)` with eigenvectors in the columns, so that
/// `a = vectors * diag(values) * vectors^T`.
pub fn sym_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "sym_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    if n <= 1 {
        return (m.diag().to_owned(), v);
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off += m[(p, q)].abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n * n) as f64 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diag().to_owned(), v)
}

/// Symmetric PSD square root and inverse square root of a matrix.
///
/// Eigenvalues are floored at `floor` before taking roots so that mildly
/// indefinite inputs (rounding noise) still yield usable factors.
pub fn sym_sqrt_pair(a: &Array2<f64>, floor: f64) -> (Array2<f64>, Array2<f64>) {
    let n = a.nrows();
    let (vals, vecs) = sym_eigen(a);
    let mut sqrt = Array2::<f64>::zeros((n, n));
    let mut inv_sqrt = Array2::<f64>::zeros((n, n));
    for (k, &lam) in vals.iter().enumerate() {
        let lam = lam.max(floor);
        let s = lam.sqrt();
        for i in 0..n {
            for j in 0..n {
                let vv = vecs[(i, k)] * vecs[(j, k)];
                sqrt[(i, j)] += s * vv;
                inv_sqrt[(i, j)] += vv / s;
            }
        }
    }
    (sqrt, inv_sqrt)
}

/// Frobenius inner product `sum_ij a_ij b_ij`; equals `Tr(A B)` when either
/// factor is symmetric.
pub fn frob_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// In-place symmetrization a <- (a + a^T)/2 for matrices that are symmetric
/// up to rounding.
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
}
