use serde::{Deserialize, Serialize};

use super::success::{success_probability_exact, success_probability_simplified, Method};
use super::AnalysisError;
use crate::params::{MetaCurve, SystemParams};

/// λ·log₂(1+θ)·p_s in bits/s/Hz per m².
pub fn throughput_density(params: &SystemParams, p_s: f64) -> f64 {
    params.lambda() * params.theta().ln_1p() / std::f64::consts::LN_2 * p_s
}

/// Variance of the per-link success probability described by `curve`.
pub fn variance_of_success(curve: &MetaCurve) -> f64 {
    curve.variance()
}

/// Fraction of links whose success probability is at least 0.95.
pub fn likely_rate_95(curve: &MetaCurve) -> f64 {
    1.0 - curve.eval(0.95)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOptimum {
    pub lambda: f64,
    pub throughput: f64,
    pub p_s: f64,
}

fn throughput_at(params: &SystemParams, log_lambda: f64, method: Method) -> Result<(f64, f64), AnalysisError> {
    let p = params.with_lambda(log_lambda.exp())?;
    let ps = match method {
        Method::Exact => success_probability_exact(&p)?.p_s,
        _ => success_probability_simplified(&p)?.p_s,
    };
    Ok((throughput_density(&p, ps), ps))
}

/// Throughput-maximizing density by golden-section search on log λ over
/// [10⁻⁶, 10⁻²] m⁻².
pub fn optimal_density(params: &SystemParams, method: Method) -> Result<DensityOptimum, AnalysisError> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-6f64.ln(), 1e-2f64.ln());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = throughput_at(params, c, method)?.0;
    let mut fd = throughput_at(params, d, method)?.0;
    while b - a > 1e-4 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = throughput_at(params, c, method)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = throughput_at(params, d, method)?.0;
        }
    }
    let x = 0.5 * (a + b);
    let (throughput, p_s) = throughput_at(params, x, method)?;
    Ok(DensityOptimum { lambda: x.exp(), throughput, p_s })
}
