use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::success::{saturated_jumps, ActivityScale};
use super::AnalysisError;
use crate::numerics::{gil_pelaez_cdf_grid, JumpMeasure};
use crate::params::SystemParams;

const XI_MIN: f64 = 1e-4;
const BISECTION_STEPS: usize = 40;
const RESOLUTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityKind {
    /// every interferer saturated: rates below are provably stable
    Sufficient,
    /// interferers active with probability ξ: rates above are provably unstable
    Necessary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRate {
    pub rate: f64,
    /// false when even the smallest probed rate violates the target
    pub feasible: bool,
    pub probes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub epsilon: f64,
    pub xi_sufficient: f64,
    pub xi_necessary: f64,
}

/// Largest ξ on [10⁻⁴, 1] whose unstable-link fraction stays within ε.
pub fn critical_arrival_rate(
    params: &SystemParams,
    epsilon: f64,
    kind: StabilityKind,
) -> Result<CriticalRate, AnalysisError> {
    Prober::new(params, kind).bisect(epsilon)
}

/// Evaluates P(μ ≤ ξ) for one kind, remembering inverted values so that
/// several ε can share probes.
struct Prober<'a> {
    params: &'a SystemParams,
    saturated: Option<JumpMeasure>,
    cache: HashMap<u64, f64>,
}

impl<'a> Prober<'a> {
    fn new(params: &'a SystemParams, kind: StabilityKind) -> Self {
        let saturated = match kind {
            StabilityKind::Sufficient => Some(saturated_jumps(params, ActivityScale::Saturated)),
            StabilityKind::Necessary => None,
        };
        Self { params, saturated, cache: HashMap::new() }
    }

    /// Whether P(μ ≤ ξ) ≤ ε. Cantelli's inequality on −ln μ settles clear
    /// cases; the rest go through the inversion.
    fn stable_at(&mut self, xi: f64, epsilon: f64) -> Result<bool, AnalysisError> {
        if xi >= 1.0 {
            return Ok(epsilon >= 1.0);
        }
        if let Some(&f) = self.cache.get(&xi.to_bits()) {
            return Ok(f <= epsilon);
        }
        let rebuilt;
        let jm = match &self.saturated {
            Some(jm) => jm,
            // the favorable law depends on the probed rate itself
            None => {
                rebuilt = saturated_jumps(&self.params.with_xi(xi)?, ActivityScale::ArrivalRate);
                &rebuilt
            }
        };
        let a = -xi.ln();
        let m = -jm.mean_log();
        let v = jm.var_log();
        let gap = (a - m) * (a - m);
        if a > m && v / (v + gap) <= epsilon {
            return Ok(true);
        }
        if a < m && gap / (v + gap) > epsilon {
            return Ok(false);
        }
        let f = gil_pelaez_cdf_grid(jm, &[xi])?[0];
        self.cache.insert(xi.to_bits(), f);
        Ok(f <= epsilon)
    }

    fn bisect(&mut self, epsilon: f64) -> Result<CriticalRate, AnalysisError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(AnalysisError::Input(format!("epsilon {epsilon} outside [0,1]")));
        }
        let mut probes = 1;
        if self.stable_at(1.0, epsilon)? {
            return Ok(CriticalRate { rate: 1.0, feasible: true, probes });
        }
        probes += 1;
        if !self.stable_at(XI_MIN, epsilon)? {
            return Ok(CriticalRate { rate: 0.0, feasible: false, probes });
        }
        let (mut lo, mut hi) = (XI_MIN, 1.0);
        for _ in 0..BISECTION_STEPS {
            if hi - lo < RESOLUTION {
                break;
            }
            let mid = 0.5 * (lo + hi);
            probes += 1;
            if self.stable_at(mid, epsilon)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(CriticalRate { rate: lo, feasible: true, probes })
    }
}

/// Both critical rates at one ε.
pub fn stability_region(params: &SystemParams, epsilon: f64) -> Result<StabilityResult, AnalysisError> {
    Ok(stability_curve(params, &[epsilon])?.remove(0))
}

/// Critical rates over several ε, sharing probes between them.
pub fn stability_curve(
    params: &SystemParams,
    epsilons: &[f64],
) -> Result<Vec<StabilityResult>, AnalysisError> {
    let run = |kind| -> Result<Vec<f64>, AnalysisError> {
        let mut prober = Prober::new(params, kind);
        epsilons.iter().map(|&e| Ok(prober.bisect(e)?.rate)).collect()
    };
    let (s, n) = rayon::join(|| run(StabilityKind::Sufficient), || run(StabilityKind::Necessary));
    let (s, n) = (s?, n?);
    Ok(epsilons
        .iter()
        .zip(s.into_iter().zip(n))
        .map(|(&epsilon, (xi_sufficient, xi_necessary))| StabilityResult { epsilon, xi_sufficient, xi_necessary })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_epsilon() {
        let p = SystemParams::defaults();
        assert!(critical_arrival_rate(&p, 1.5, StabilityKind::Sufficient).is_err());
    }

    #[test]
    fn vanishing_threshold_is_stable_at_half_load() {
        let p = SystemParams::defaults().with_theta(1e-6).unwrap();
        let mut prober = Prober::new(&p, StabilityKind::Sufficient);
        assert!(prober.stable_at(0.5, 0.01).unwrap());
        assert!(prober.cache.is_empty(), "decided without inversion");
    }

    #[test]
    fn lower_threshold_admits_higher_rates() {
        let p = SystemParams::defaults();
        let lo = critical_arrival_rate(&p.with_theta_db(-10.0).unwrap(), 0.1, StabilityKind::Sufficient).unwrap();
        let hi = critical_arrival_rate(&p, 0.1, StabilityKind::Sufficient).unwrap();
        assert!(lo.rate > hi.rate + 0.3, "{lo:?} vs {hi:?}");
    }

    #[test]
    fn zero_tolerance_is_still_feasible_for_light_load() {
        let p = SystemParams::defaults();
        let s = critical_arrival_rate(&p, 0.0, StabilityKind::Sufficient).unwrap();
        assert!(s.rate < 0.05);
    }

    #[test]
    fn ordering_and_monotonicity_over_epsilon() {
        let p = SystemParams::defaults();
        let eps = [0.05, 0.2, 0.35, 0.5];
        let curve = stability_curve(&p, &eps).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].xi_sufficient >= w[0].xi_sufficient - RESOLUTION);
            assert!(w[1].xi_necessary >= w[0].xi_necessary - RESOLUTION);
        }
        for c in &curve {
            assert!(c.xi_sufficient <= c.xi_necessary + RESOLUTION, "{c:?}");
        }
    }
}
