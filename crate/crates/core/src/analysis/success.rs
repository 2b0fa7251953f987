use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::numerics::{
    binomial_real, complex_binomial, fixed_point_solve, integrate, integrate_radial,
    integrate_radial_breaks, lambert_w0, ln_gamma_complex, periodic_midpoint, FixedPointReport, JumpMeasure,
};
use crate::params::SystemParams;

const SOLVER_TOL: f64 = 1e-10;
const SOLVER_DAMPING: f64 = 0.5;
const SOLVER_MAX_ITER: usize = 2000;
const ANGLE_NODES: usize = 256;
const SERIES_TERMS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Simplified,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub p_s: f64,
    pub method: Method,
    pub report: FixedPointReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// every transmitter permanently backlogged
    Dominant,
    /// every transmitter active independently with probability ξ
    Favorable,
}

/// Activity level of interferers in the homogeneous moment formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityScale {
    Saturated,
    ArrivalRate,
}

impl ActivityScale {
    fn value(self, params: &SystemParams) -> f64 {
        match self {
            ActivityScale::Saturated => 1.0,
            ActivityScale::ArrivalRate => params.xi(),
        }
    }
}

/// Success probability of the typical link given interferer distances to
/// its receiver and their activity probabilities.
pub fn conditional_success_prob(
    interferer_distances: &[f64],
    active_probs: &[f64],
    params: &SystemParams,
) -> Result<f64, AnalysisError> {
    if interferer_distances.len() != active_probs.len() {
        return Err(AnalysisError::Input(format!(
            "{} distances but {} activity probabilities",
            interferer_distances.len(),
            active_probs.len()
        )));
    }
    let denom = params.theta() * params.r().powf(params.alpha());
    let mut p = params.noise_only_success();
    for (&x, &a) in interferer_distances.iter().zip(active_probs) {
        if !(x > 0.0) {
            return Err(AnalysisError::Input(format!("distance {x} must be positive")));
        }
        if !(0.0..=1.0).contains(&a) {
            return Err(AnalysisError::Input(format!("activity {a} outside [0,1]")));
        }
        let d = x.powf(params.alpha()) / denom;
        p *= 1.0 - a / (1.0 + d);
    }
    Ok(p)
}

/// Long-run busy fraction of a Geo/Geo/1 queue.
pub fn steady_state_activity(xi: f64, mu: f64) -> f64 {
    if mu <= xi {
        1.0
    } else {
        xi / mu
    }
}

/// ψ-average of min{c(1 + θ/d^α), 1} with d² = 1 + v² − 2v cos ψ, where v
/// is the receiver separation in units of r.
fn capped_activity(v: f64, c: f64, theta: f64, alpha: f64) -> f64 {
    if c >= 1.0 {
        return 1.0;
    }
    // below d* the cap is active
    let d_star = (c * theta / (1.0 - c)).powf(1.0 / alpha);
    let cos_star = (1.0 + v * v - d_star * d_star) / (2.0 * v);
    if v == 0.0 || cos_star <= -1.0 {
        return if v == 0.0 && d_star < 1.0 {
            c * (1.0 + theta)
        } else {
            1.0
        };
    }
    let psi_star = if cos_star >= 1.0 { 0.0 } else { cos_star.acos() };
    let f = |psi: f64| {
        let d2 = (1.0 + v * v - 2.0 * v * psi.cos()).max(0.0);
        (c * (1.0 + theta / d2.powf(0.5 * alpha))).min(1.0)
    };
    let tail = match integrate(f, psi_star, PI, 1e-12) {
        Ok(q) => q.value,
        Err(_) => periodic_midpoint(|p| if p <= PI { f(p) } else { 0.0 }, 4096),
    };
    ((psi_star + tail) / PI).clamp(c.min(1.0), 1.0)
}

/// Activity probability of a link whose receiver sits at distance `u` from
/// an active typical transmitter, given success probability `p_s`.
pub fn conditional_active_prob(u: f64, p_s: f64, params: &SystemParams) -> f64 {
    capped_activity(u / params.r(), params.xi() / p_s, params.theta(), params.alpha())
}

/// ∫₀^∞ min{c(1 + u^{−α/2}), 1}/(1 + u^{α/2}) du
fn capped_kernel_integral(c: f64, alpha: f64, delta: f64) -> Result<f64, AnalysisError> {
    if c >= 1.0 {
        return Ok(PI * delta / (PI * delta).sin());
    }
    let h = 0.5 * alpha;
    let kink = (c / (1.0 - c)).powf(1.0 / h);
    let f = |u: f64| (c * (1.0 + u.powf(-h))).min(1.0) / (1.0 + u.powf(h));
    Ok(integrate_radial_breaks(f, &[kink], 1e-12)?.value)
}

fn solve(
    what: &'static str,
    method: Method,
    params: &SystemParams,
    map: impl FnMut(f64) -> f64,
) -> Result<FixedPointSolution, AnalysisError> {
    let report = fixed_point_solve(
        map,
        params.noise_only_success(),
        SOLVER_DAMPING,
        SOLVER_TOL,
        SOLVER_MAX_ITER,
    );
    if !report.converged {
        return Err(AnalysisError::NotConverged { what, report });
    }
    Ok(FixedPointSolution { p_s: report.value, method, report })
}

/// Success probability from the single-integral fixed point (a lower bound
/// on [`success_probability_exact`]).
pub fn success_probability_simplified(params: &SystemParams) -> Result<FixedPointSolution, AnalysisError> {
    let n = params.noise_term();
    let scale = params.interference_scale();
    let (alpha, delta, xi) = (params.alpha(), params.delta(), params.xi());
    let mut failure = None;
    let sol = solve("simplified", Method::Simplified, params, |p| {
        match capped_kernel_integral(xi / p, alpha, delta) {
            Ok(i) => (-n - scale * i).exp(),
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => sol,
    }
}

/// Success probability from the double-integral fixed point.
pub fn success_probability_exact(params: &SystemParams) -> Result<FixedPointSolution, AnalysisError> {
    let n = params.noise_term();
    let (alpha, theta, xi) = (params.alpha(), params.theta(), params.xi());
    let pre = params.lambda() * params.r() * params.r();
    // φ-integral of the interference kernel, independent of p
    let g = |v: f64| {
        periodic_midpoint(
            |phi| 1.0 / (1.0 + (1.0 + v * v - 2.0 * v * phi.cos()).max(0.0).powf(0.5 * alpha) / theta),
            ANGLE_NODES,
        )
    };
    // the radial nodes repeat between iterations
    let mut g_cache: HashMap<u64, f64> = HashMap::new();
    let mut failure = None;
    let sol = solve("exact", Method::Exact, params, |p| {
        let c = xi / p;
        // v dv = dt/2 with t = v²
        let integrand = |t: f64| {
            let v = t.sqrt();
            let gv = *g_cache.entry(t.to_bits()).or_insert_with(|| g(v));
            0.5 * capped_activity(v, c, theta, alpha) * gv
        };
        match integrate_radial_breaks(integrand, &[], 1e-11) {
            Ok(q) => (-n - pre * q.value).exp(),
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        }
    });
    match failure {
        Some(e) => Err(e.into()),
        None => sol,
    }
}

/// The light-traffic constant c = λπr²θ^δ ∫ min{ξ(1+u^{−α/2}), 1}/(1+u^{α/2}) du.
pub fn light_traffic_constant(params: &SystemParams) -> Result<f64, AnalysisError> {
    Ok(params.interference_scale() * capped_kernel_integral(params.xi(), params.alpha(), params.delta())?)
}

/// Closed-form light-traffic solution p = −c/W₀(−c) of p = exp(−c/p).
pub fn success_probability_closed_form(params: &SystemParams) -> Result<f64, AnalysisError> {
    let c = light_traffic_constant(params)?;
    if c > (-1.0f64).exp() {
        return Err(AnalysisError::NoLightTrafficSolution { c });
    }
    if c == 0.0 {
        return Ok(1.0);
    }
    Ok(-c / lambert_w0(-c)?)
}

/// Success probability when interferers are all on (lower bound) or each
/// on independently with probability ξ (upper bound).
pub fn bound_success_probability(params: &SystemParams, regime: Regime) -> f64 {
    let a = match regime {
        Regime::Dominant => 1.0,
        Regime::Favorable => params.xi(),
    };
    (-params.noise_term() - a * params.saturated_exponent()).exp()
}

/// log E[μ^{jω}] in the homogeneous system with activity scale 1 or ξ.
pub fn dominant_log_moment(
    omega: f64,
    scale: ActivityScale,
    params: &SystemParams,
) -> Result<Complex64, AnalysisError> {
    dominant_log_moment_s(Complex64::new(0.0, omega), scale, params)
}

/// log E[μ^s] in the homogeneous system for complex s with Re s ≥ 0.
///
/// Non-negative integer orders use the finite binomial sum. Other orders
/// use the binomial series when it settles within 64 terms. Otherwise the
/// saturated scale uses Γ(1−δ)Γ(s+δ)/Γ(s) for the integral below and other
/// scales evaluate λπr²θ^δ ∫₀^∞ [1 − (1 − a/(1+t^{1/δ}))^s] dt directly.
pub fn dominant_log_moment_s(
    s: Complex64,
    scale: ActivityScale,
    params: &SystemParams,
) -> Result<Complex64, AnalysisError> {
    let a = scale.value(params);
    let delta = params.delta();
    let noise = -s * params.noise_term();
    let k_sat = params.saturated_exponent();
    if s.im == 0.0 && s.re >= 0.0 && s.re.fract() == 0.0 && s.re <= SERIES_TERMS as f64 {
        let m = s.re as u32;
        let sum: f64 = (1..=m)
            .map(|k| a.powi(k as i32) * binomial_real(m as f64, k) * binomial_real(delta - 1.0, k - 1))
            .sum();
        return Ok(noise - k_sat * sum);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut largest = 0.0f64;
    let mut settled = false;
    for k in 1..=SERIES_TERMS {
        let t = complex_binomial(s, k) * (a.powi(k as i32) * binomial_real(delta - 1.0, k - 1));
        sum += t;
        largest = largest.max(t.norm());
        if t.norm() < 1e-10 * sum.norm() {
            settled = true;
            break;
        }
    }
    if settled && sum.is_finite() && largest <= 1e6 * sum.norm() {
        return Ok(noise - k_sat * sum);
    }
    if a == 1.0 {
        let ratio = (ln_gamma_complex(s + delta) - ln_gamma_complex(s)).exp();
        let gamma = ln_gamma_complex(Complex64::new(1.0 - delta, 0.0)).re.exp();
        return Ok(noise - params.interference_scale() * gamma * ratio);
    }
    let inv = 1.0 / delta;
    let term = |t: f64| Complex64::new(1.0, 0.0) - (s * (-a / (1.0 + t.powf(inv))).ln_1p()).exp();
    let re = integrate_radial(|t| term(t).re, 1e-10)?;
    let im = integrate_radial(|t| term(t).im, 1e-10)?;
    Ok(noise - params.interference_scale() * Complex64::new(re, im))
}

/// Jump measure of −ln μ in the homogeneous system.
pub fn saturated_jumps(params: &SystemParams, scale: ActivityScale) -> JumpMeasure {
    JumpMeasure::homogeneous(
        params.interference_scale(),
        scale.value(params),
        params.delta(),
        params.noise_term(),
    )
}
