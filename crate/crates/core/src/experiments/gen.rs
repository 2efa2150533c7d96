//! Seeded generation of sensing matrices, block-sparse signals, and noise.

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{BlockPartition, Problem};

/// splitmix64 finalizer.
fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed derivation: trial `trial` of cell `cell` of
/// `experiment` always maps to the same stream seed, independent of
/// scheduling.
pub fn derive_seed(master_seed: u64, experiment: &str, cell: u64, trial: u64) -> u64 {
    let mut h = mix(master_seed ^ 0xA076_1D64_78BD_642F);
    for &b in experiment.as_bytes() {
        h = mix(h ^ u64::from(b));
    }
    h = mix(h ^ cell);
    mix(h ^ trial)
}

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Intra-block correlation of the generated signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IntraCorr {
    /// The same AR(1) coefficient for every nonzero block.
    Fixed(f64),
    /// A fresh coefficient per nonzero block, uniform on `[lo, hi)`.
    UniformRange(f64, f64),
}

impl IntraCorr {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            IntraCorr::Fixed(r) => r,
            IntraCorr::UniformRange(lo, hi) => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            }
        }
    }
}

/// Everything needed to synthesize one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    pub partition: BlockPartition,
    /// Number of nonzero blocks, placed uniformly at random.
    pub k_active: usize,
    pub intra_corr: IntraCorr,
    /// Scale every nonzero block to unit norm.
    pub normalize_blocks: bool,
    /// Measurement SNR in dB; `None` means noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl GenSpec {
    fn check(&self) -> Result<()> {
        use crate::error::BsblError::InvalidConfig;
        self.partition.check_against(self.n)?;
        if self.k_active > self.partition.g() {
            return Err(InvalidConfig(format!(
                "k_active = {} exceeds block count {}",
                self.k_active,
                self.partition.g()
            )));
        }
        let valid = |r: f64| r > -1.0 && r < 1.0;
        match self.intra_corr {
            IntraCorr::Fixed(r) if !valid(r) => {
                return Err(InvalidConfig(format!("correlation {r} outside (-1, 1)")))
            }
            IntraCorr::UniformRange(lo, hi) if !(valid(lo) && hi <= 1.0 && lo <= hi) => {
                return Err(InvalidConfig(format!(
                    "correlation range [{lo}, {hi}] invalid"
                )))
            }
            _ => {}
        }
        Ok(())
    }
}

fn sample_sensing_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut phi = Array2::<f64>::zeros((m, n));
    for v in phi.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    for mut col in phi.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|x| x / norm);
        }
    }
    phi
}

/// Zero-mean Gaussian sensing matrix with unit-norm columns.
pub fn gen_sensing_matrix(m: usize, n: usize, seed: u64) -> Array2<f64> {
    sample_sensing_matrix(m, n, &mut rng_from(seed))
}

/// Stationary AR(1) block of length `d` with coefficient `r` and unit
/// marginal variance: `x_t = r x_{t-1} + sqrt(1 - r^2) e_t`.
fn sample_ar1_block(d: usize, r: f64, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let mut x = Array1::<f64>::zeros(d);
    let innovation = (1.0 - r * r).sqrt();
    x[0] = rng.sample(StandardNormal);
    for t in 1..d {
        let e: f64 = rng.sample(StandardNormal);
        x[t] = r * x[t - 1] + innovation * e;
    }
    x
}

fn sample_signal(spec: &GenSpec, rng: &mut ChaCha8Rng) -> (Array1<f64>, Vec<usize>) {
    let mut x = Array1::<f64>::zeros(spec.n);
    let mut active =
        rand::seq::index::sample(rng, spec.partition.g(), spec.k_active).into_vec();
    active.sort_unstable();
    for &i in &active {
        let d = spec.partition.size(i);
        let r = spec.intra_corr.draw(rng);
        let mut block = sample_ar1_block(d, r, rng);
        if spec.normalize_blocks {
            let norm = block.dot(&block).sqrt();
            if norm > 0.0 {
                block.mapv_inplace(|v| v / norm);
            }
        }
        let range = spec.partition.range(i);
        x.slice_mut(s![range.start..range.end]).assign(&block);
    }
    (x, active)
}

/// Draw a block-sparse signal according to `spec` (consumes `spec.seed`).
pub fn gen_signal(spec: &GenSpec) -> Result<Array1<f64>> {
    spec.check()?;
    Ok(sample_signal(spec, &mut rng_from(spec.seed)).0)
}

/// Add white Gaussian noise scaled so the realized SNR equals `snr_db`
/// exactly. Returns the noisy vector and the realized noise variance
/// `||v||^2 / M`.
pub fn add_noise(clean: &Array1<f64>, snr_db: f64, rng: &mut ChaCha8Rng) -> (Array1<f64>, f64) {
    if snr_db.is_infinite() {
        return (clean.clone(), 0.0);
    }
    let mut v = Array1::<f64>::zeros(clean.len());
    for e in v.iter_mut() {
        *e = rng.sample(StandardNormal);
    }
    let vnorm = v.dot(&v).sqrt();
    if vnorm == 0.0 {
        return (clean.clone(), 0.0);
    }
    let target = clean.dot(clean).sqrt() / 10f64.powf(snr_db / 20.0);
    v.mapv_inplace(|e| e * target / vnorm);
    let lambda_true = v.dot(&v) / clean.len() as f64;
    (clean + &v, lambda_true)
}

/// A fully synthesized trial.
#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub problem: Problem,
    pub partition: BlockPartition,
    pub x_gen: Array1<f64>,
    /// Indices of the nonzero blocks.
    pub active_blocks: Vec<usize>,
    /// Signal indices covered by the nonzero blocks.
    pub support_cols: Vec<usize>,
    /// Realized noise variance, `None` for noiseless trials.
    pub lambda_true: Option<f64>,
}

/// Generate sensing matrix, signal, and measurements from one seed stream.
pub fn synthesize(spec: &GenSpec) -> Result<SynthBundle> {
    spec.check()?;
    let mut rng = rng_from(spec.seed);
    let phi = sample_sensing_matrix(spec.m, spec.n, &mut rng);
    let (x_gen, active_blocks) = sample_signal(spec, &mut rng);
    let clean = phi.dot(&x_gen);
    let (y, lambda_true) = match spec.snr_db {
        Some(snr) if snr.is_finite() => {
            let (y, lt) = add_noise(&clean, snr, &mut rng);
            (y, Some(lt))
        }
        _ => (clean, None),
    };
    let support_cols = active_blocks
        .iter()
        .flat_map(|&i| spec.partition.range(i))
        .collect();
    Ok(SynthBundle {
        problem: Problem::new(y, phi)?,
        partition: spec.partition.clone(),
        x_gen,
        active_blocks,
        support_cols,
        lambda_true,
    })
}
