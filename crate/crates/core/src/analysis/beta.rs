use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::meta::{MetaKernel, MetaOptions, Normalization};
use super::AnalysisError;
use crate::params::{MetaCurve, SystemParams};

const BETA_GRID: usize = 2001;

/// Beta law matched to the first two moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub mu: f64,
    pub beta: f64,
    /// first shape parameter μβ/(1−μ)
    pub a: f64,
    pub m1: f64,
    pub m2: f64,
    /// variance vanished, the law is a point mass at `mu`
    pub point_mass: bool,
}

pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, x)
    }
}

impl BetaFit {
    pub fn from_moments(m1: f64, m2: f64) -> Result<Self, AnalysisError> {
        if !(m1 > 0.0 && m1 <= 1.0 && m2 > 0.0 && m2 <= m1 + 1e-15) {
            return Err(AnalysisError::Input(format!("moments ({m1}, {m2}) not from a law on (0,1]")));
        }
        let var = m2 - m1 * m1;
        if var <= 1e-14 || m1 >= 1.0 {
            return Ok(Self { mu: m1, beta: f64::INFINITY, a: f64::INFINITY, m1, m2, point_mass: true });
        }
        let beta = (m1 - m2) * (1.0 - m1) / var;
        let a = m1 * beta / (1.0 - m1);
        Ok(Self { mu: m1, beta, a, m1, m2, point_mass: false })
    }

    pub fn cdf(&self, u: f64) -> f64 {
        if self.point_mass {
            return if u < self.mu { 0.0 } else { 1.0 };
        }
        beta_cdf(self.a, self.beta, u)
    }

    pub fn mean(&self) -> f64 {
        if self.point_mass {
            self.mu
        } else {
            self.a / (self.a + self.beta)
        }
    }

    pub fn variance(&self) -> f64 {
        if self.point_mass {
            return 0.0;
        }
        let s = self.a + self.beta;
        self.a * self.beta / (s * s * (s + 1.0))
    }

    /// CDF sampled on a uniform grid.
    pub fn to_curve(&self, grid_size: usize) -> Result<MetaCurve, AnalysisError> {
        if self.point_mass {
            return Ok(MetaCurve::step(self.mu.clamp(0.0, 1.0))?);
        }
        let grid = MetaCurve::uniform_grid(grid_size);
        let cdf = grid.iter().map(|&u| self.cdf(u)).collect();
        Ok(MetaCurve::from_raw(grid, cdf)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSolution {
    pub fit: BetaFit,
    pub iterations: usize,
    pub converged: bool,
}

fn moments(kernel: &MetaKernel, eta: &[f64]) -> (f64, f64) {
    let n = kernel.noise();
    let c = kernel.prefactor();
    let m1 = (-n - c * eta[0]).exp();
    let m2 = (-2.0 * n - c * (2.0 * eta[0] - eta[1])).exp();
    (m1, m2)
}

/// Moment-matched Beta approximation of the per-link success distribution.
pub fn meta_distribution_beta(
    params: &SystemParams,
    tol: f64,
    max_iter: usize,
) -> Result<BetaSolution, AnalysisError> {
    let opts = MetaOptions { max_order: 2, ..MetaOptions::default() };
    let kernel = MetaKernel::new(params, &opts);
    let eta = kernel.initial_eta(Normalization::PlaneIntegral);
    let (m1, m2) = moments(&kernel, &eta);
    let mut fit = BetaFit::from_moments(m1, m2)?;
    for it in 1..=max_iter {
        let curve = fit.to_curve(BETA_GRID)?;
        let eta = kernel.eta(&curve, 2);
        let (m1, m2) = moments(&kernel, &eta);
        let next = BetaFit::from_moments(m1, m2)?;
        let done = (next.mu - fit.mu).abs() < tol
            && (next.point_mass == fit.point_mass)
            && (next.point_mass || (next.beta - fit.beta).abs() < tol);
        fit = next;
        if done {
            return Ok(BetaSolution { fit, iterations: it, converged: true });
        }
    }
    Ok(BetaSolution { fit, iterations: max_iter, converged: false })
}
