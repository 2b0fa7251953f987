use num_complex::Complex64;

use super::gil_pelaez::LogMgf;
use super::quadrature::gauss_legendre;

const Z_LO: f64 = 1e-12;
const Z_HI: f64 = 1e3;
const PER_DECADE: f64 = 16.0;
const DECADES: f64 = 15.0;

/// Law of X = exp(−d − Σ z_i) where the z_i are the points of a Poisson
/// process on (0, ∞) with a binned intensity.
///
/// Jumps are accumulated into logarithmic bins on [10⁻¹², 10³]. Each bin is
/// treated as uniform around its mass-weighted mean. Bins filled by
/// [`JumpMeasure::add`] span the full bin width; bins built from a tail
/// function have their width matched to the exact second moment. Jumps below
/// the first edge are folded into the drift d by their first moment.
#[derive(Debug, Clone)]
pub struct JumpMeasure {
    drift: f64,
    mass: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

fn edge(i: usize) -> f64 {
    Z_LO * 10f64.powf(i as f64 / PER_DECADE)
}

fn bin_count() -> usize {
    (DECADES * PER_DECADE) as usize
}

struct Bin {
    mass: f64,
    center: f64,
    half_width: f64,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

impl JumpMeasure {
    pub fn new(drift: f64) -> Self {
        let n = bin_count();
        Self { drift, mass: vec![0.0; n], first: vec![0.0; n], second: vec![0.0; n] }
    }

    /// Add `mass` units of intensity at jump size `z`.
    pub fn add(&mut self, z: f64, mass: f64) {
        if !(mass > 0.0) || !(z > 0.0) {
            return;
        }
        if z < Z_LO {
            self.drift += mass * z;
            return;
        }
        let z = z.min(Z_HI);
        let i = (((z / Z_LO).log10() * PER_DECADE) as usize).min(self.mass.len() - 1);
        self.mass[i] += mass;
        self.first[i] += mass * z;
    }

    pub fn add_drift(&mut self, d: f64) {
        self.drift += d;
    }

    /// Superpose another measure (independent jump fields multiply laws).
    pub fn merge(&mut self, other: &JumpMeasure) {
        self.drift += other.drift;
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            *a += b;
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            *a += b;
        }
    }

    /// Jumps z = −ln(1 − pK) generated by points of a homogeneous PPP whose
    /// kernel K = 1/(1 + |x|^α/(θr^α)) is thinned by an independent mark p.
    /// `scale` is λπr²θ^δ, the expected number of points with K ≥ 1/2.
    pub fn homogeneous(scale: f64, p: f64, delta: f64, drift: f64) -> Self {
        let mut m = Self::new(drift);
        if p <= 0.0 {
            return m;
        }
        // number of jumps larger than z
        let tail = |z: f64| -> f64 {
            let k = p / (-(-z).exp_m1());
            if k <= 1.0 {
                0.0
            } else {
                scale * (k - 1.0).powf(delta)
            }
        };
        let z_max = if p < 1.0 { -(-p).ln_1p() } else { f64::INFINITY };
        m.drift += scale * delta / (1.0 - delta) * p.powf(delta) * Z_LO.powf(1.0 - delta);
        let (nodes, weights) = gauss_legendre(8);
        for i in 0..m.mass.len() {
            let lo = edge(i);
            if lo >= z_max {
                break;
            }
            let hi = edge(i + 1).min(z_max);
            let (t_lo, t_hi) = (tail(lo), tail(hi));
            let mass = t_lo - t_hi;
            if !(mass > 0.0) {
                continue;
            }
            // ∫T and ∫zT over the bin, refined dyadically towards z_max
            let (mut i0, mut i1) = (0.0, 0.0);
            let mut panel = |a: f64, b: f64| {
                let (h, mid) = (0.5 * (b - a), 0.5 * (a + b));
                for (x, w) in nodes.iter().zip(&weights) {
                    let z = mid + h * x;
                    let t = tail(z);
                    i0 += w * h * t;
                    i1 += w * h * z * t;
                }
            };
            if hi < edge(i + 1) {
                let mut a = lo;
                for _ in 0..40 {
                    let b = 0.5 * (a + hi);
                    panel(a, b);
                    a = b;
                }
            } else {
                panel(lo, hi);
            }
            // integration by parts against the tail
            let c = (lo * t_lo - hi * t_hi + i0) / mass;
            let var = ((lo - c).powi(2) * t_lo - (hi - c).powi(2) * t_hi + 2.0 * (i1 - c * i0)) / mass;
            m.mass[i] = mass;
            m.first[i] = mass * c;
            m.second[i] = mass * (c * c + var.max(0.0));
        }
        m
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    fn bins(&self) -> impl Iterator<Item = Bin> + '_ {
        let n = self.mass.len();
        (0..n).filter(|&i| self.mass[i] > 0.0).map(move |i| {
            let center = self.first[i] / self.mass[i];
            let half_width = if self.second[i] > 0.0 {
                (3.0 * (self.second[i] / self.mass[i] - center * center)).max(0.0).sqrt()
            } else {
                let hi = if i + 1 == n { Z_HI } else { edge(i + 1) };
                0.5 * (hi - edge(i)).max(0.0)
            };
            Bin { mass: self.mass[i], center, half_width }
        })
    }

    /// E[ln X].
    pub fn mean_log(&self) -> f64 {
        -(self.drift + self.first.iter().sum::<f64>())
    }

    /// Var[ln X].
    pub fn var_log(&self) -> f64 {
        self.bins()
            .map(|b| b.mass * (b.center * b.center + b.half_width * b.half_width / 3.0))
            .sum()
    }

    /// E[X^s] for real s ≥ 0.
    pub fn moment(&self, s: f64) -> f64 {
        let mut e = -s * self.drift;
        for b in self.bins() {
            let sh = s * b.half_width;
            let shape = if sh < 1e-8 { 1.0 } else { sh.sinh() / sh };
            e -= b.mass * (1.0 - (-s * b.center).exp() * shape);
        }
        e.exp()
    }
}

impl LogMgf for JumpMeasure {
    fn log_mgf(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, -omega * self.drift);
        for b in self.bins() {
            let phi = Complex64::from_polar(sinc(omega * b.half_width), -omega * b.center);
            acc -= b.mass * (1.0 - phi);
        }
        acc
    }

    fn log_mgf_uniform(&self, start: f64, step: f64, n: usize) -> Vec<Complex64> {
        let mut out: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(0.0, -(start + step * i as f64) * self.drift)).collect();
        for b in self.bins() {
            let rot = Complex64::from_polar(1.0, -step * b.center);
            let spin = Complex64::from_polar(1.0, step * b.half_width);
            let mut phase = Complex64::new(1.0, 0.0);
            let mut wave = Complex64::new(1.0, 0.0);
            for (i, o) in out.iter_mut().enumerate() {
                let w = start + step * i as f64;
                if i % 256 == 0 {
                    phase = Complex64::from_polar(1.0, -w * b.center);
                    wave = Complex64::from_polar(1.0, w * b.half_width);
                }
                let x = w * b.half_width;
                let s = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { wave.im / x };
                *o -= b.mass * (1.0 - phase * s);
                phase *= rot;
                wave *= spin;
            }
        }
        out
    }
}
