//! Analytical and Monte Carlo tools for SINR performance of Poisson bipolar
//! networks whose transmitters are driven by random packet arrivals.
//!
//! The crate is split into four layers:
//!
//! * [`params`] holds model parameters, unit conversion and shared types.
//! * [`numerics`] provides quadrature, Lambert W, characteristic function
//!   inversion and a fixed-point driver.
//! * [`analysis`] computes success probabilities, stability thresholds and
//!   the distribution of per-link success probabilities.
//! * [`sim`] is a slotted simulator of interacting queues on a torus.

pub mod analysis;
mod error;
pub mod numerics;
pub mod params;
pub mod sim;

pub use error::Error;
pub use params::{build_params, MetaCurve, RawParams, Region, SystemParams};
