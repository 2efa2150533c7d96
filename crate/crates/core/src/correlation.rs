//! AR(1) Toeplitz correlation modeling: construction of the constrained
//! correlation matrix, and estimation of the AR coefficient from learned
//! covariance statistics or from a recovered signal.

use ndarray::Array2;

use crate::error::{BsblError, Result};

/// Largest magnitude the estimated coefficient is clipped to. Keeps the
/// resulting Toeplitz matrix safely positive definite.
pub const R_CLIP: f64 = 0.99;

/// Energy below which a signal block is treated as zero when estimating the
/// coefficient from a solution.
const ZERO_BLOCK_ENERGY: f64 = 1e-12;

/// An AR(1) coefficient, guaranteed to lie strictly inside (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArCoefficient(f64);

impl ArCoefficient {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r.abs() >= 1.0 {
            return Err(BsblError::InvalidCoefficient(r));
        }
        Ok(Self(r))
    }

    pub const fn zero() -> Self {
        Self(0.0)
    }

    /// Clip a raw ratio into [-R_CLIP, R_CLIP]:
    /// `sign(r) * min(|r|, 0.99)`. NaN (0/0 ratios) maps to 0.
    pub fn clipped(raw: f64) -> Self {
        if !raw.is_finite() {
            return Self(0.0);
        }
        Self(raw.signum() * raw.abs().min(R_CLIP))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The d x d AR(1) correlation matrix with entry `(j, k) = r^|j-k|`.
pub fn toeplitz_ar1(r: ArCoefficient, d: usize) -> Array2<f64> {
    let r = r.value();
    let mut powers = Vec::with_capacity(d);
    let mut acc = 1.0;
    for _ in 0..d {
        powers.push(acc);
        acc *= r;
    }
    let mut out = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        for k in 0..d {
            out[(j, k)] = powers[j.abs_diff(k)];
        }
    }
    out
}

/// Mean of the main diagonal and mean of the first sub-diagonal.
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

/// Estimate the AR(1) coefficient of a covariance-like matrix as the ratio
/// of its sub-diagonal mean to its diagonal mean, clipped.
///
/// A 1 x 1 matrix has no sub-diagonal and yields 0; a zero diagonal is
/// degenerate and also yields 0.
pub fn estimate_r(b: &Array2<f64>) -> ArCoefficient {
    if b.nrows() < 2 {
        return ArCoefficient::zero();
    }
    let (m0, m1) = diag_means(b);
    if m0 == 0.0 {
        return ArCoefficient::zero();
    }
    ArCoefficient::clipped(m1 / m0)
}

/// Pooled estimate over several per-block matrices: diagonal and
/// sub-diagonal means are summed across blocks before taking the ratio.
///
/// Blocks of size 1 carry no information about the lag-1 correlation and are
/// left out of both sums.
pub fn estimate_r_pooled(b_list: &[Array2<f64>]) -> ArCoefficient {
    let mut sum0 = 0.0;
    let mut sum1 = 0.0;
    for b in b_list {
        if b.nrows() < 2 {
            continue;
        }
        let (m0, m1) = diag_means(b);
        sum0 += m0;
        sum1 += m1;
    }
    if sum0 == 0.0 {
        return ArCoefficient::zero();
    }
    ArCoefficient::clipped(sum1 / sum0)
}

/// Estimate the AR(1) coefficient directly from recovered signal blocks.
///
/// Each block of length >= 2 with non-negligible energy contributes its
/// lag-1 sample autocorrelation `sum_t x_t x_{t+1} / sum_t x_t^2`; the
/// per-block estimates are averaged and the mean is clipped. With no usable
/// blocks the result is 0.
pub fn estimate_r_from_blocks<'a, I>(blocks: I) -> ArCoefficient
where
    I: IntoIterator<Item = ndarray::ArrayView1<'a, f64>>,
{
    let mut sum = 0.0;
    let mut count = 0usize;
    for x in blocks {
        if x.len() < 2 {
            continue;
        }
        let energy: f64 = x.iter().map(|v| v * v).sum();
        if energy < ZERO_BLOCK_ENERGY {
            continue;
        }
        let lag1: f64 = (0..x.len() - 1).map(|t| x[t] * x[t + 1]).sum();
        sum += lag1 / energy;
        count += 1;
    }
    if count == 0 {
        return ArCoefficient::zero();
    }
    ArCoefficient::clipped(sum / count as f64)
}
