//! Numerical toolkit for the logarithmic break time `τ = ln q / h_KS` of
//! chaotic dynamics: KS-entropy from partitions, ergodicity checks,
//! ħ-graining of phase space, the timescale algebra, and a kicked-rotor
//! comparison of quantum and classical evolution.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod entropy;
pub mod ergodicity;
pub mod error;
pub mod export;
pub mod generators;
pub mod geometry;
pub mod partition;
pub mod rng;
pub mod semiclassical;
pub mod timescale;

pub use dynamics::{MapSpec, Orbit, PhasePoint};
pub use entropy::{
    block_entropies, ks_entropy_estimate, BiasCorrection, BlockEntropyCurve, EntropyEstimate,
    EntropyOptions, EstimatorMethod, Sampling,
};
pub use ergodicity::{correlation, ergodic_average, CorrelationCurve, MeasurableSet};
pub use error::{Error, Result};
pub use generators::{
    generator_cardinality_bounds, grain_region, verify_generator, CardinalityWindow, Coding,
    GeneratorReport, Grain, GrainedRegion, PhaseRegion, QuarterDisk,
};
pub use geometry::AxisBox;
pub use partition::{dynamical_refinement, join, partition_entropy, Partition};
pub use timescale::{
    log_timescale, time_rescaled_entropy, universal_constants, universal_timescale, wavepacket_spread, TimescaleResult,
    WavepacketSpread,
};
