//! Shared fixtures for the solver benchmarks.

use bsbl_core::experiments::{synthesize, GenSpec, IntraCorr, SynthBundle};
use bsbl_core::BlockPartition;

/// A mid-sized noisy instance exercising all solver paths.
pub fn noisy_fixture(seed: u64) -> SynthBundle {
    let spec = GenSpec {
        m: 64,
        n: 256,
        partition: BlockPartition::uniform(32, 8).unwrap(),
        k_active: 4,
        intra_corr: IntraCorr::UniformRange(0.8, 1.0),
        normalize_blocks: false,
        snr_db: Some(15.0),
        seed,
    };
    synthesize(&spec).unwrap()
}

/// A small noiseless instance for the posterior microbenchmark.
pub fn noiseless_fixture(seed: u64) -> SynthBundle {
    let spec = GenSpec {
        m: 48,
        n: 144,
        partition: BlockPartition::uniform(36, 4).unwrap(),
        k_active: 6,
        intra_corr: IntraCorr::Fixed(0.9),
        normalize_blocks: true,
        snr_db: None,
        seed,
    };
    synthesize(&spec).unwrap()
}
