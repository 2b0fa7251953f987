use num_complex::Complex64;

/// Generalized binomial coefficient z(z−1)···(z−k+1)/k! with complex z.
pub fn complex_binomial(z: Complex64, k: u32) -> Complex64 {
    let mut c = Complex64::new(1.0, 0.0);
    for i in 0..k {
        c = c * (z - i as f64) / (i + 1) as f64;
    }
    c
}

/// Generalized binomial coefficient with real upper index.
pub fn binomial_real(x: f64, k: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (x - i as f64) / (i + 1) as f64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_cases() {
        assert_eq!(complex_binomial(c(3.7, -2.0), 0), c(1.0, 0.0));
        assert_eq!(complex_binomial(c(5.0, 0.0), 2), c(10.0, 0.0));
        assert_eq!(complex_binomial(c(0.0, 1.0), 2), c(-0.5, -0.5));
        assert_eq!(complex_binomial(c(3.0, 0.0), 5), c(0.0, 0.0));
    }

    #[test]
    fn integer_table_exact() {
        for n in 0..=20u32 {
            let mut row = 1u64;
            for k in 0..=n {
                assert_eq!(complex_binomial(c(n as f64, 0.0), k), c(row as f64, 0.0));
                assert_eq!(binomial_real(n as f64, k), row as f64);
                row = row * (n - k) as u64 / (k + 1) as u64;
            }
        }
    }

    #[test]
    fn negative_fraction() {
        // (−1/2 choose 3) = −5/16
        assert!((binomial_real(-0.5, 3) + 5.0 / 16.0).abs() < 1e-16);
    }

    proptest! {
        #[test]
        fn pascal_recurrence(re in -10.0f64..10.0, im in -10.0f64..10.0, k in 1u32..30) {
            let z = c(re, im);
            let lhs = complex_binomial(z, k);
            let (a, b) = (complex_binomial(z - 1.0, k - 1), complex_binomial(z - 1.0, k));
            let rhs = a + b;
            let scale = lhs.norm().max(a.norm()).max(b.norm()).max(1e-300);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
        }
    }
}
