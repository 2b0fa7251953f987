use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::numerics::{binomial_real, gauss_legendre, gil_pelaez_cdf_grid, JumpMeasure};
use crate::params::{MetaCurve, SystemParams};

/// Scaling of the starting moments relative to the plane integral of the
/// interference kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// 2π³δθ^δξ^k(−1)^{k+1}C(δ−1, k−1)/sin(πδ): the exact plane integral
    PlaneIntegral,
    /// the same without one factor of π
    Printed,
}

impl Normalization {
    fn factor(self) -> f64 {
        match self {
            Normalization::PlaneIntegral => 1.0,
            Normalization::Printed => 1.0 / PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaOptions {
    pub grid_size: usize,
    /// stop when successive moment integrals differ by less than this
    pub tol: f64,
    pub max_iter: usize,
    /// Gauss–Legendre nodes on each of v ∈ [0,1] and v ∈ [1,∞)
    pub radial_nodes: usize,
    /// midpoint nodes on the full circle (even)
    pub angular_nodes: usize,
    pub max_order: usize,
    pub normalization: Normalization,
}

impl Default for MetaOptions {
    fn default() -> Self {
        Self {
            grid_size: 201,
            tol: 1e-3,
            max_iter: 30,
            radial_nodes: 64,
            angular_nodes: 256,
            max_order: 64,
            normalization: Normalization::PlaneIntegral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSolution {
    pub curve: MetaCurve,
    pub initial: MetaCurve,
    pub iterations: usize,
    /// max_k change of the moment integrals at the last step
    pub change: f64,
    pub history: Vec<f64>,
    /// moment integrals k = 1..=max_order at exit
    pub eta: Vec<f64>,
}

const Q_BINS: usize = 64;

/// Discretized interference geometry shared by every iteration.
#[derive(Debug, Clone)]
pub struct MetaKernel {
    xi: f64,
    noise: f64,
    /// λr²/2π
    prefactor: f64,
    max_order: usize,
    /// v·(quadrature weight) per radial node
    radial_weight: Vec<f64>,
    /// per radial node: 1 − ξ/H at the half-circle angle nodes
    k_table: Vec<Vec<f64>>,
    /// per radial node: H at the half-circle angle nodes
    h_table: Vec<Vec<f64>>,
    /// per radial node: Σ_ψ Δψ K^k for k = 1..=max_order
    a_pow: Vec<Vec<f64>>,
    /// full-circle weight of one half-circle node
    angle_weight: f64,
}

struct NodeOutput {
    b_pow: Vec<f64>,
    jumps: Option<JumpMeasure>,
}

impl MetaKernel {
    pub fn new(params: &SystemParams, opts: &MetaOptions) -> Self {
        let (x, w) = gauss_legendre(opts.radial_nodes);
        let mut v = Vec::new();
        let mut rw = Vec::new();
        for (&xi, &wi) in x.iter().zip(&w) {
            let t = 0.5 * (xi + 1.0);
            v.push(t);
            rw.push(0.5 * wi * t);
        }
        for (&xi, &wi) in x.iter().zip(&w) {
            // v = 1/s on s ∈ (0,1), dv = ds/s²
            let s = 0.5 * (xi + 1.0);
            v.push(1.0 / s);
            rw.push(0.5 * wi / (s * s * s));
        }
        let half = opts.angular_nodes / 2;
        let angle_weight = 2.0 * 2.0 * PI / opts.angular_nodes as f64;
        let (alpha, theta, xi) = (params.alpha(), params.theta(), params.xi());
        let mut k_table = Vec::with_capacity(v.len());
        let mut h_table = Vec::with_capacity(v.len());
        let mut a_pow = Vec::with_capacity(v.len());
        for &vv in &v {
            let mut ks = Vec::with_capacity(half);
            let mut hs = Vec::with_capacity(half);
            for i in 0..half {
                let ang = PI * (i as f64 + 0.5) / half as f64;
                let da = (1.0 + vv * vv - 2.0 * vv * ang.cos()).max(0.0).powf(0.5 * alpha);
                ks.push(theta / (da + theta));
                hs.push(xi * (1.0 + theta / da));
            }
            let mut ap = vec![0.0; opts.max_order];
            for &k in &ks {
                let mut pw = 1.0;
                for a in ap.iter_mut() {
                    pw *= k;
                    *a += angle_weight * pw;
                }
            }
            k_table.push(ks);
            h_table.push(hs);
            a_pow.push(ap);
        }
        Self {
            xi,
            noise: params.noise_term(),
            prefactor: params.lambda() * params.r() * params.r() / (2.0 * PI),
            max_order: opts.max_order,
            radial_weight: rw,
            k_table,
            h_table,
            a_pow,
            angle_weight,
        }
    }

    /// Closed form of the starting moment integrals, k = 1..=max_order.
    pub fn closed_initial_eta(params: &SystemParams, max_order: usize) -> Vec<f64> {
        let d = params.delta();
        let c = 2.0 * PI.powi(3) * d * params.theta().powf(d) / (PI * d).sin();
        (1..=max_order)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                c * params.xi().powi(k as i32) * sign * binomial_real(d - 1.0, k as u32 - 1)
            })
            .collect()
    }

    /// Visit (q, probability) for q = min(H/μ, 1) with μ distributed as `curve`.
    fn for_each_q(curve: &MetaCurve, h: f64, mut f: impl FnMut(f64, f64)) {
        if h >= 1.0 {
            f(1.0, 1.0);
            return;
        }
        let g = curve.grid();
        let c = curve.cdf();
        let fh = curve.eval(h);
        if fh > 0.0 {
            f(1.0, fh);
        }
        let n = g.len();
        let i0 = g.partition_point(|&x| x <= h).max(1) - 1;
        let first = (c[i0 + 1] - fh).max(0.0);
        if first > 0.0 {
            f(h / (0.5 * (h + g[i0 + 1])), first);
        }
        for i in i0 + 1..n - 1 {
            let m = c[i + 1] - c[i];
            if m > 0.0 {
                f(h / (0.5 * (g[i] + g[i + 1])), m);
            }
        }
        let rest = 1.0 - c[n - 1];
        if rest > 0.0 {
            f(h, rest);
        }
    }

    fn node(&self, j: usize, curve: Option<&MetaCurve>, orders: usize, weight: f64, jumps: bool) -> NodeOutput {
        let xi = self.xi;
        let mut b_pow = vec![0.0; orders];
        let mut ones = 0.0;
        // q histogram on log scale between ξ and 1, plus the atom at 1
        let mut qm = [0.0; Q_BINS];
        let mut qf = [0.0; Q_BINS];
        let span = if xi < 1.0 { -xi.ln() } else { 1.0 };
        let mut visit = |q: f64, prob: f64| {
            let m = prob * self.angle_weight;
            if q >= 1.0 {
                ones += m;
                return;
            }
            let mut pw = 1.0;
            for b in b_pow.iter_mut() {
                pw *= q;
                *b += m * pw;
            }
            if jumps {
                let idx = (((q / xi).ln() / span * Q_BINS as f64).max(0.0) as usize).min(Q_BINS - 1);
                qm[idx] += m;
                qf[idx] += m * q;
            }
        };
        for &h in &self.h_table[j] {
            match curve {
                Some(c) => Self::for_each_q(c, h, &mut visit),
                None => visit(xi, 1.0),
            }
        }
        for b in b_pow.iter_mut() {
            *b += ones;
        }
        let jumps = jumps.then(|| {
            let mut jm = JumpMeasure::new(0.0);
            let w = weight * self.radial_weight[j] * self.angle_weight;
            let mut bins: Vec<(f64, f64)> = (0..Q_BINS)
                .filter(|&b| qm[b] > 0.0)
                .map(|b| (qf[b] / qm[b], qm[b]))
                .collect();
            if ones > 0.0 {
                bins.push((1.0, ones));
            }
            for &k in &self.k_table[j] {
                for &(q, m) in &bins {
                    jm.add(-(-q * k).ln_1p(), w * m);
                }
            }
            jm
        });
        NodeOutput { b_pow, jumps }
    }

    /// Moment integrals η^{(k)} and, optionally, the jump measure of −ln μ.
    fn step(&self, curve: Option<&MetaCurve>, orders: usize, scale: f64, jumps: bool) -> (Vec<f64>, Option<JumpMeasure>) {
        let weight = scale * self.prefactor;
        let outs: Vec<NodeOutput> = (0..self.radial_weight.len())
            .into_par_iter()
            .map(|j| self.node(j, curve, orders, weight, jumps))
            .collect();
        let mut eta = vec![0.0; orders];
        let mut jm = jumps.then(|| JumpMeasure::new(self.noise));
        for (j, o) in outs.into_iter().enumerate() {
            for k in 0..orders {
                eta[k] += scale * self.radial_weight[j] * self.a_pow[j][k] * o.b_pow[k];
            }
            if let (Some(acc), Some(part)) = (jm.as_mut(), o.jumps.as_ref()) {
                acc.merge(part);
            }
        }
        (eta, jm)
    }

    /// Moment integrals for q ≡ ξ, i.e. interferers active with probability ξ.
    pub fn initial_eta(&self, normalization: Normalization) -> Vec<f64> {
        self.step(None, self.max_order, normalization.factor(), false).0
    }

    /// Moment integrals for the law described by `curve`.
    pub fn eta(&self, curve: &MetaCurve, orders: usize) -> Vec<f64> {
        self.step(Some(curve), orders, 1.0, false).0
    }

    /// log-moment prefactor λr²/2π
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    fn invert(&self, jm: &JumpMeasure, grid: &[f64]) -> Result<MetaCurve, AnalysisError> {
        let vals = gil_pelaez_cdf_grid(jm, &grid[1..])?;
        let mut cdf = Vec::with_capacity(grid.len());
        cdf.push(0.0);
        cdf.extend(vals);
        Ok(MetaCurve::from_raw(grid.to_vec(), cdf)?)
    }
}

fn check_opts(opts: &MetaOptions) -> Result<(), AnalysisError> {
    if opts.grid_size < 51 {
        return Err(AnalysisError::Input(format!("grid size {} below 51", opts.grid_size)));
    }
    if opts.angular_nodes < 4 || !opts.angular_nodes.is_multiple_of(2) || opts.radial_nodes < 4 || opts.max_order == 0 {
        return Err(AnalysisError::Input("degenerate discretization".into()));
    }
    Ok(())
}

/// Starting curve: interferers active independently with probability ξ.
pub fn initial_curve(
    params: &SystemParams,
    grid_size: usize,
    normalization: Normalization,
) -> Result<MetaCurve, AnalysisError> {
    let opts = MetaOptions { grid_size, normalization, ..MetaOptions::default() };
    check_opts(&opts)?;
    let kernel = MetaKernel::new(params, &opts);
    let (_, jm) = kernel.step(None, 1, normalization.factor(), true);
    kernel.invert(&jm.expect("jumps requested"), &MetaCurve::uniform_grid(grid_size))
}

/// Distribution of the per-link success probability, by fixed-point
/// iteration on the curve.
pub fn meta_distribution(
    params: &SystemParams,
    grid_size: usize,
    tol: f64,
    max_iter: usize,
) -> Result<MetaSolution, AnalysisError> {
    meta_distribution_with(params, &MetaOptions { grid_size, tol, max_iter, ..MetaOptions::default() })
}

pub fn meta_distribution_with(params: &SystemParams, opts: &MetaOptions) -> Result<MetaSolution, AnalysisError> {
    check_opts(opts)?;
    let kernel = MetaKernel::new(params, opts);
    let grid = MetaCurve::uniform_grid(opts.grid_size);
    let (mut eta_prev, jm) = kernel.step(None, opts.max_order, opts.normalization.factor(), true);
    let initial = kernel.invert(&jm.expect("jumps requested"), &grid)?;
    let mut curve = initial.clone();
    let mut history = Vec::new();
    for it in 1..=opts.max_iter {
        let (eta, jm) = kernel.step(Some(&curve), opts.max_order, 1.0, true);
        let change = eta
            .iter()
            .zip(&eta_prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        history.push(change);
        if change < opts.tol {
            return Ok(MetaSolution { curve, initial, iterations: it, change, history, eta });
        }
        let next = kernel.invert(&jm.expect("jumps requested"), &grid)?;
        if it == opts.max_iter {
            return Err(AnalysisError::MetaNotConverged {
                iterations: it,
                change,
                previous: Box::new(curve),
                current: Box::new(next),
            });
        }
        curve = next;
        eta_prev = eta;
    }
    Err(AnalysisError::MetaNotConverged {
        iterations: 0,
        change: f64::INFINITY,
        previous: Box::new(initial.clone()),
        current: Box::new(initial),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::success::{saturated_jumps, ActivityScale};

    #[test]
    fn initial_moments_match_closed_form() {
        let p = SystemParams::defaults();
        let opts = MetaOptions::default();
        let kernel = MetaKernel::new(&p, &opts);
        let numeric = kernel.initial_eta(Normalization::PlaneIntegral);
        let closed = MetaKernel::closed_initial_eta(&p, opts.max_order);
        for k in 0..8 {
            let rel = (numeric[k] - closed[k]).abs() / closed[k].abs();
            assert!(rel < 2e-3, "k={} {} vs {}", k + 1, numeric[k], closed[k]);
        }
        let printed = kernel.initial_eta(Normalization::Printed);
        assert!((printed[0] * PI - numeric[0]).abs() < 1e-12 * numeric[0]);
    }

    #[test]
    fn point_mass_at_exact_solution_is_its_fixed_point() {
        // with every link at μ = p_s the first moment reproduces the
        // double-integral fixed point
        for theta_db in [0.0, 10.0] {
            let p = SystemParams::defaults().with_theta_db(theta_db).unwrap();
            let ps = crate::analysis::success_probability_exact(&p).unwrap().p_s;
            let kernel = MetaKernel::new(&p, &MetaOptions::default());
            let eta = kernel.eta(&MetaCurve::step(ps).unwrap(), 1);
            let m1 = (-kernel.noise() - kernel.prefactor() * eta[0]).exp();
            assert!((m1 - ps).abs() < 2e-3, "{theta_db} dB: {m1} vs {ps}");
        }
    }

    #[test]
    fn initial_curve_matches_homogeneous_law() {
        let p = SystemParams::defaults();
        let grid = MetaCurve::uniform_grid(101);
        let kernel_curve = initial_curve(&p, 101, Normalization::PlaneIntegral).unwrap();
        let jm = saturated_jumps(&p, ActivityScale::ArrivalRate);
        let direct = gil_pelaez_cdf_grid(&jm, &grid[1..]).unwrap();
        for (i, f) in direct.iter().enumerate() {
            assert!((kernel_curve.cdf()[i + 1] - f).abs() < 5e-3, "u={}", grid[i + 1]);
        }
    }

    #[test]
    fn q_enumeration_is_a_probability() {
        let c = MetaCurve::new(vec![0.0, 0.5, 0.8, 1.0], vec![0.0, 0.1, 0.6, 0.9]).unwrap();
        for h in [0.05, 0.5, 0.65, 0.95, 1.2] {
            let mut total = 0.0;
            let mut ok = true;
            MetaKernel::for_each_q(&c, h, |q, m| {
                total += m;
                ok &= q > 0.0 && q <= 1.0 + 1e-15;
            });
            assert!(ok);
            assert!((total - 1.0).abs() < 1e-14, "h={h} total={total}");
        }
    }

    #[test]
    fn grid_too_small_rejected() {
        let p = SystemParams::defaults();
        assert!(meta_distribution(&p, 11, 1e-3, 10).is_err());
    }

    #[test]
    fn heavier_load_raises_the_curve() {
        let p = SystemParams::defaults().with_theta_db(10.0).unwrap();
        let light = meta_distribution(&p, 101, 1e-3, 30).unwrap();
        let heavy = meta_distribution(&p.with_xi(0.3).unwrap(), 101, 1e-3, 30).unwrap();
        for &u in light.curve.grid() {
            assert!(heavy.curve.eval(u) >= light.curve.eval(u) - 1e-3, "u={u}");
        }
        assert!(heavy.curve.mean() < light.curve.mean());
    }
}
