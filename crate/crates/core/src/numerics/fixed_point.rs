use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub value: f64,
    pub iterations: usize,
    /// |T(p) − p| at the returned value
    pub residual: f64,
    pub converged: bool,
}

/// Damped Picard iteration p ← (1−d)·p + d·T(p) on (0, 1].
///
/// Stops as soon as |T(p) − p| ≤ `tol`; hitting `max_iter` yields a report
/// with `converged == false`.
pub fn fixed_point_solve(
    mut map: impl FnMut(f64) -> f64,
    init: f64,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> FixedPointReport {
    let damping = damping.clamp(f64::EPSILON, 1.0);
    let mut p = init.clamp(f64::MIN_POSITIVE, 1.0);
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        let t = map(p);
        residual = (t - p).abs();
        if residual <= tol {
            return FixedPointReport { value: p, iterations: it, residual, converged: true };
        }
        if !t.is_finite() || it == max_iter {
            break;
        }
        p = ((1.0 - damping) * p + damping * t).clamp(f64::MIN_POSITIVE, 1.0);
    }
    FixedPointReport { value: p, iterations: max_iter, residual, converged: false }
}
