//! Closed-form and fixed-point analysis of the network.

mod beta;
mod meta;
mod metrics;
mod stability;
mod success;

use thiserror::Error;

use crate::numerics::{FixedPointReport, NumericsError};
use crate::params::{MetaCurve, ParamError};

pub use beta::{beta_cdf, meta_distribution_beta, BetaFit, BetaSolution};
pub use meta::{
    initial_curve, meta_distribution, meta_distribution_with, MetaKernel, MetaOptions, MetaSolution,
    Normalization,
};
pub use metrics::{likely_rate_95, optimal_density, throughput_density, variance_of_success, DensityOptimum};
pub use stability::{
    critical_arrival_rate, stability_curve, stability_region, CriticalRate, StabilityKind,
    StabilityResult,
};
pub use success::{
    bound_success_probability, conditional_active_prob, conditional_success_prob,
    dominant_log_moment, dominant_log_moment_s, light_traffic_constant, saturated_jumps,
    steady_state_activity, success_probability_closed_form, success_probability_exact,
    success_probability_simplified, ActivityScale, FixedPointSolution, Method, Regime,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("{what} fixed point did not converge: {report:?}")]
    NotConverged {
        what: &'static str,
        report: FixedPointReport,
    },
    #[error("light-traffic constant {c} exceeds 1/e, no closed-form solution")]
    NoLightTrafficSolution { c: f64 },
    #[error("meta distribution iteration stalled after {iterations} steps (last change {change:e})")]
    MetaNotConverged {
        iterations: usize,
        change: f64,
        previous: Box<MetaCurve>,
        current: Box<MetaCurve>,
    },
    #[error("invalid input: {0}")]
    Input(String),
}
