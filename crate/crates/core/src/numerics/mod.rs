//! Numerical kernels shared by the analytical code.

mod binomial;
mod fixed_point;
mod gamma;
mod gil_pelaez;
mod jump_measure;
mod lambert;
mod quadrature;

use thiserror::Error;

pub use binomial::{binomial_real, complex_binomial};
pub use fixed_point::{fixed_point_solve, FixedPointReport};
pub use gamma::ln_gamma_complex;
pub use gil_pelaez::{gil_pelaez_cdf, gil_pelaez_cdf_grid, FnLogMgf, LogMgf};
pub use jump_measure::JumpMeasure;
pub use lambert::lambert_w0;
pub use quadrature::{
    gauss_legendre, integrate, integrate_breaks, integrate_radial, integrate_radial_breaks,
    periodic_midpoint, Quadrature,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("argument {0} outside the domain of the function")]
    Domain(f64),
    #[error("quadrature did not reach tolerance {tol:e}: estimate {value}, error {error:e} after {evals} evaluations")]
    Quadrature {
        value: f64,
        error: f64,
        tol: f64,
        evals: usize,
    },
    #[error("characteristic function does not decay: |M(jΩ)|/Ω = {ratio:e} at Ω = {omega:e}")]
    NoDecay { omega: f64, ratio: f64 },
    #[error("series did not converge within {terms} terms (last term {last:e})")]
    Series { terms: usize, last: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
}
