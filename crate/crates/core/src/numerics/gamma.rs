use std::f64::consts::PI;

use num_complex::Complex64;

const G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// log Γ(z) for complex z away from the non-positive integers (Lanczos, g = 7).
///
/// The imaginary part is not reduced to (−π, π], so only exp of the result,
/// or differences of nearby arguments, should be relied on.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        let s = (z * PI).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_complex(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_values() {
        assert!((ln_gamma_complex(c(5.0, 0.0)).re - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma_complex(c(0.5, 0.0)).re - 0.5 * PI.ln()).abs() < 1e-13);
        // Γ(0.25) = 3.6256099082219083119
        assert!((ln_gamma_complex(c(0.25, 0.0)).exp().re - 3.625_609_908_221_908).abs() < 1e-12);
        // Γ(−0.5) = −2√π
        let g = ln_gamma_complex(c(-0.5, 0.0)).exp();
        assert!((g.re + 2.0 * PI.sqrt()).abs() < 1e-12 && g.im.abs() < 1e-12);
    }

    #[test]
    fn imaginary_axis_modulus() {
        // |Γ(iy)|² = π / (y sinh πy)
        for y in [0.1, 1.0, 3.0, 10.0] {
            let m = 2.0 * ln_gamma_complex(c(0.0, y)).re;
            let exact = (PI / (y * (PI * y).sinh())).ln();
            assert!((m - exact).abs() < 1e-11 * exact.abs().max(1.0), "y={y}");
        }
    }

    proptest! {
        #[test]
        fn recurrence(re in -3.7f64..20.0, im in -50.0f64..50.0) {
            prop_assume!(im.abs() > 0.05 || (re - re.round()).abs() > 0.05);
            let z = c(re, im);
            let ratio = (ln_gamma_complex(z + 1.0) - ln_gamma_complex(z)).exp();
            prop_assert!((ratio - z).norm() < 1e-10 * z.norm().max(1.0));
        }
    }
}
