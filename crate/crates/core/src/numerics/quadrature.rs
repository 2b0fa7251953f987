use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use super::NumericsError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = k.abs();
    let mut fv = [0.0; 14];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * k;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = k * h;
    asc *= h.abs();
    abs *= h.abs();
    let mut err = ((k - g) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs);
    }
    (value, err)
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature over consecutive
/// segments `points[0]..points[1]..…`, to absolute tolerance `tol`.
pub fn integrate_breaks(
    mut f: impl FnMut(f64) -> f64,
    points: &[f64],
    tol: f64,
) -> Result<Quadrature, NumericsError> {
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(&mut f, w[0], w[1]);
            evals += 15;
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() {
            return Err(NumericsError::NonFinite("integrand"));
        }
        if error <= tol {
            return Ok(Quadrature { value, error, evals });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => return Ok(Quadrature { value, error, evals }),
        };
        let m = 0.5 * (worst.a + worst.b);
        if heap.len() >= MAX_INTERVALS || !(m > worst.a && m < worst.b) {
            heap.push(worst);
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
            return Err(NumericsError::Quadrature { value, error, tol, evals });
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evals += 30;
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2 });
    }
}

/// Adaptive quadrature of `f` over the finite interval [a, b].
pub fn integrate(
    f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Quadrature, NumericsError> {
    if b < a {
        return integrate(f, b, a, tol).map(|q| Quadrature { value: -q.value, ..q });
    }
    integrate_breaks(f, &[a, b], tol)
}

/// ∫₀^∞ f(u) du, splitting at u = 1 and mapping the tail through u = 1/w.
pub fn integrate_radial(f: impl FnMut(f64) -> f64, tol: f64) -> Result<f64, NumericsError> {
    integrate_radial_breaks(f, &[], tol).map(|q| q.value)
}

/// As [`integrate_radial`], with extra breakpoints where `f` has kinks.
pub fn integrate_radial_breaks(
    mut f: impl FnMut(f64) -> f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Quadrature, NumericsError> {
    // s ∈ [0,1] is u itself, s ∈ (1,2) is w = 2 − s with u = 1/w
    let mut pts = vec![0.0, 1.0, 2.0];
    for &b in breaks {
        if b.is_finite() && b > 0.0 && b != 1.0 {
            pts.push(if b < 1.0 { b } else { 2.0 - 1.0 / b });
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let g = |s: f64| {
        if s <= 1.0 {
            f(s)
        } else {
            let w = 2.0 - s;
            f(1.0 / w) / (w * w)
        }
    };
    integrate_breaks(g, &pts, tol)
}

/// Midpoint rule over one period [0, 2π) with `n` nodes.
pub fn periodic_midpoint(mut f: impl FnMut(f64) -> f64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| f(h * (i as f64 + 0.5))).sum::<f64>() * h
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let q = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((q.value - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits() {
        let q = integrate(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((q.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-9).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn radial_exponential() {
        let v = integrate_radial(|u: f64| (-u).exp(), 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn radial_power_law_tail() {
        // ∫ du/(1+u^1.9) = π/(1.9 sin(π/1.9))
        let a = 1.9;
        let exact = PI / a / (PI / a).sin();
        let v = integrate_radial(|u: f64| 1.0 / (1.0 + u.powf(a)), 1e-9).unwrap();
        assert!((v - exact).abs() < 1e-8);
    }

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
        h * (inner + 0.5 * (f(a) + f(b)))
    }

    // min{c(1+u^{−1.9}), 1}/(1+u^{1.9}) with c = ξ/p for ξ=0.1, p=0.8
    fn kinked(u: f64) -> f64 {
        let c: f64 = 0.1 / 0.8;
        (c * (1.0 + u.powf(-1.9))).min(1.0) / (1.0 + u.powf(1.9))
    }

    #[test]
    fn radial_kink_matches_split_oracle() {
        let c: f64 = 0.1 / 0.8;
        let kink = (c / (1.0 - c)).powf(1.0 / 1.9);
        // oracle: fine trapezoids on [0,kink] and [kink,1] plus the tail in w = 1/u
        let head = trapezoid(kinked, 0.0, kink, 200_000) + trapezoid(kinked, kink, 1.0, 200_000);
        let tail = trapezoid(
            |w: f64| if w == 0.0 { 0.0 } else { kinked(1.0 / w) / (w * w) },
            0.0,
            1.0,
            2_000_000,
        );
        let oracle = head + tail;
        let with = integrate_radial_breaks(kinked, &[kink], 1e-9).unwrap().value;
        let without = integrate_radial(kinked, 1e-9).unwrap();
        assert!((with - oracle).abs() < 2e-4, "{with} vs {oracle}");
        assert!((with - without).abs() < 1e-7);
    }

    #[test]
    fn radial_kink_frozen_value() {
        let v = integrate_radial_breaks(kinked, &[(0.125f64 / 0.875).powf(1.0 / 1.9)], 1e-10)
            .unwrap()
            .value;
        assert!((v - KINKED_REFERENCE).abs() < 1e-7, "{v}");
    }

    // 30-digit split-domain quadrature of the same integrand
    const KINKED_REFERENCE: f64 = 0.691_915_316_812_148_8;

    #[test]
    fn divergent_integrand_reports_error() {
        assert!(integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn uncapped_kernel_diverges_at_origin() {
        let r = integrate_radial(|u: f64| (1.0 + u.powf(-1.9)) / (1.0 + u.powf(1.9)), 1e-6);
        assert!(r.is_err());
    }

    #[test]
    fn periodic_rule_spectral() {
        // ∫₀^{2π} e^{cos φ} dφ = 2π I₀(1)
        let v = periodic_midpoint(|p: f64| p.cos().exp(), 32);
        assert!((v - 2.0 * PI * 1.266_065_877_752_008_4).abs() < 1e-13);
    }

    #[test]
    fn legendre_rule() {
        for n in [1, 2, 5, 20, 80] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
            let deg = (2 * n - 1) as i32;
            let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((m - exact).abs() < 1e-12, "n={n}");
        }
    }
}
