//! Synthetic benchmark harness: seeded data generation, recovery metrics,
//! an oracle baseline, and the four sweep protocols (phase transition,
//! correlation benefit, noise robustness, unknown partition).
//!
//! All randomness flows from a single master seed through
//! [`gen::derive_seed`]: trial `t` of cell `c` of an experiment draws its
//! own stream, so reruns reproduce every record bit-exactly regardless of
//! how trials are scheduled across worker threads.

mod gen;
mod metrics;
mod protocols;

pub use gen::{
    add_noise, derive_seed, gen_sensing_matrix, gen_signal, synthesize, GenSpec, IntraCorr,
    SynthBundle,
};
pub use metrics::{nmse, oracle_ls, success, TrialRecord, SUCCESS_NMSE};
pub use protocols::{
    phase_curve, run_correlation_sweep, run_noise_sweep, run_phase_transition,
    run_unknown_partition, summarize, synth_unknown_partition, Algorithm, CellSummary,
    CorrelationConfig, NoiseConfig, PhaseConfig, PhaseCurvePoint, UnknownPartitionConfig,
};
