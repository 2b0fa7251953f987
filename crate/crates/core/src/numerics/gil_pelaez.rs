use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::quadrature::integrate;
use super::NumericsError;

const OMEGA_MIN: f64 = 1e-6;
const DECAY_TARGET: f64 = 1e-9;
const DECAY_LIMIT: f64 = 1e-6;
const OMEGA_CAP: f64 = 4_194_304.0;
const TOL: f64 = 1e-6;

/// Characteristic exponent ω ↦ log E[X^{jω}] of a random variable on (0, 1].
pub trait LogMgf: Sync {
    fn log_mgf(&self, omega: f64) -> Complex64;

    /// Values at `start + i·step` for `i < n`.
    fn log_mgf_uniform(&self, start: f64, step: f64, n: usize) -> Vec<Complex64> {
        (0..n).map(|i| self.log_mgf(start + step * i as f64)).collect()
    }
}

/// Adapter turning a closure into a [`LogMgf`].
pub struct FnLogMgf<F>(pub F);

impl<F: Fn(f64) -> Complex64 + Sync> LogMgf for FnLogMgf<F> {
    fn log_mgf(&self, omega: f64) -> Complex64 {
        (self.0)(omega)
    }
}

impl<T: LogMgf + ?Sized> LogMgf for &T {
    fn log_mgf(&self, omega: f64) -> Complex64 {
        (**self).log_mgf(omega)
    }
    fn log_mgf_uniform(&self, start: f64, step: f64, n: usize) -> Vec<Complex64> {
        (**self).log_mgf_uniform(start, step, n)
    }
}

fn modulus<L: LogMgf + ?Sized>(lm: &L, omega: f64) -> f64 {
    lm.log_mgf(omega).re.exp()
}

/// Upper integration limit Ω with |E[X^{jω}]|/ω below target on [Ω/2, Ω].
fn cutoff<L: LogMgf + ?Sized>(lm: &L) -> Result<f64, NumericsError> {
    let mut omega = 4.0;
    loop {
        let worst = (0..8)
            .map(|i| {
                let w = omega * (0.5 + i as f64 / 14.0);
                modulus(lm, w) / w
            })
            .fold(0.0, f64::max);
        if worst < DECAY_TARGET {
            return Ok(omega);
        }
        if omega >= OMEGA_CAP {
            if worst > DECAY_LIMIT {
                return Err(NumericsError::NoDecay { omega, ratio: worst });
            }
            return Ok(omega);
        }
        omega *= 2.0;
    }
}

fn integrand(l: Complex64, omega: f64, log_x: f64) -> f64 {
    (l - Complex64::new(0.0, omega * log_x)).exp().im / omega
}

/// P(X < x) from the characteristic exponent of ln X.
///
/// Evaluates ½ − (1/π)∫ Im{x^{−jω}E[X^{jω}]}/ω dω on [10⁻⁶, Ω] with
/// adaptive Gauss–Kronrod panels; the result is clamped to [0, 1].
pub fn gil_pelaez_cdf<L: LogMgf + ?Sized>(lm: &L, x: f64) -> Result<f64, NumericsError> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(NumericsError::Domain(x));
    }
    let omega_max = cutoff(lm)?;
    let a = x.ln();
    let h = PI / (a.abs() + 1.0);
    let panels = ((omega_max - OMEGA_MIN) / h).ceil().max(1.0) as usize;
    let h = (omega_max - OMEGA_MIN) / panels as f64;
    let panel_tol = (TOL * PI * h / omega_max).max(1e-15);
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for i in 0..panels {
        let lo = OMEGA_MIN + h * i as f64;
        let g = |w: f64| integrand(lm.log_mgf(w), w, a);
        match integrate(g, lo, lo + h, panel_tol) {
            Ok(q) => {
                total += q.value;
                err += q.error;
                evals += q.evals;
            }
            Err(NumericsError::Quadrature { value, error, evals: e, .. }) => {
                total += value;
                err += error;
                evals += e;
            }
            Err(e) => return Err(e),
        }
    }
    if !total.is_finite() {
        return Err(NumericsError::NonFinite("Gil-Pelaez integral"));
    }
    if err > 10.0 * TOL * PI {
        return Err(NumericsError::Quadrature { value: total, error: err, tol: TOL * PI, evals });
    }
    Ok((0.5 - total / PI).clamp(0.0, 1.0))
}

/// Moments of ln X from the exponent near ω = 0, used to size the ω step.
fn log_spread<L: LogMgf + ?Sized>(lm: &L) -> f64 {
    let e = 1e-3;
    let l = lm.log_mgf(e);
    let mean = l.im / e;
    let var = (-2.0 * l.re / (e * e)).max(0.0);
    mean.abs() + 8.0 * var.sqrt()
}

fn simpson_cdf(samples: &[Complex64], step: f64, stride: usize, log_x: f64) -> f64 {
    let n = (samples.len() - 1) / stride;
    let h = step * stride as f64;
    let rot = Complex64::from_polar(1.0, -h * log_x);
    let mut phase = Complex64::from_polar(1.0, -OMEGA_MIN * log_x);
    let mut acc = 0.0;
    for i in 0..=n {
        if i % 512 == 0 {
            phase = Complex64::from_polar(1.0, -(OMEGA_MIN + h * i as f64) * log_x);
        }
        let w = OMEGA_MIN + h * i as f64;
        let c = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += c * (samples[i * stride] * phase).im / w;
        phase *= rot;
    }
    0.5 - acc * h / 3.0 / PI
}

/// CDF at many points sharing one set of characteristic function samples on
/// a uniform ω grid (composite Simpson). The grid is refined until halving
/// the step changes no output by more than 10⁻⁵.
pub fn gil_pelaez_cdf_grid<L: LogMgf + ?Sized>(lm: &L, xs: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if let Some(&bad) = xs.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(NumericsError::Domain(bad));
    }
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let omega_max = cutoff(lm)?;
    let span = xs.iter().map(|x| x.ln().abs()).fold(0.0, f64::max) + log_spread(lm) + 1.0;
    let mut step = PI / (2.0 * span);
    for _ in 0..6 {
        let n = (((omega_max - OMEGA_MIN) / step).ceil() as usize).div_ceil(4) * 4;
        let step_used = (omega_max - OMEGA_MIN) / n as f64;
        let samples: Vec<Complex64> = lm
            .log_mgf_uniform(OMEGA_MIN, step_used, n + 1)
            .into_iter()
            .map(Complex64::exp)
            .collect();
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(NumericsError::NonFinite("characteristic function"));
        }
        let pairs: Vec<(f64, f64)> = xs
            .par_iter()
            .map(|&x| {
                let a = x.ln();
                (simpson_cdf(&samples, step_used, 1, a), simpson_cdf(&samples, step_used, 2, a))
            })
            .collect();
        let gap = pairs.iter().map(|(f, g)| (f - g).abs()).fold(0.0, f64::max);
        if gap <= 1e-5 {
            return Ok(pairs.into_iter().map(|(f, _)| f.clamp(0.0, 1.0)).collect());
        }
        step /= 2.0;
    }
    Err(NumericsError::Quadrature { value: f64::NAN, error: f64::NAN, tol: 1e-5, evals: 0 })
}
