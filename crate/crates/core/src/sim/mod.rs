//! Slotted simulation of spatially interacting queues.

mod engine;
mod stats;
mod topology;

use thiserror::Error;

pub use engine::{run_realizations, run_simulation, run_simulation_with, SimConfig, TrafficMode};
pub use stats::{
    activity_vs_distance, empirical_meta, unstable_fraction, ActivityBin, EmpiricalMeta, PooledStats, MIN_ATTEMPTS,
    SimStats,
};
pub use topology::{generate_topology, wrap_distance, Topology};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    Config(String),
    #[error("no link has at least {min_attempts} attempts")]
    NoQualifyingLinks { min_attempts: u64 },
    #[error(transparent)]
    Param(#[from] crate::params::ParamError),
}

/// SplitMix64 finalizer, used to derive independent seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
