use std::f64::consts::E;

use super::NumericsError;

const BRANCH: f64 = -1.0 / E;

/// Principal branch W₀ of the Lambert function, w·e^w = x for x ≥ −1/e.
pub fn lambert_w0(x: f64) -> Result<f64, NumericsError> {
    if x.is_nan() || x < BRANCH - 4.0 * f64::EPSILON {
        return Err(NumericsError::Domain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let q = E * x + 1.0;
    if q <= 0.0 {
        return Ok(-1.0);
    }
    let mut w = if x < -0.3 {
        let p = (2.0 * q).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0))
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        let done = (next - w).abs() <= 1e-16 * (1.0 + next.abs());
        // stay on the principal branch
        w = next.max(-1.0);
        if done {
            break;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(x: f64) -> f64 {
        let w = lambert_w0(x).unwrap();
        (w * w.exp() - x).abs()
    }

    #[test]
    fn reference_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
        // omega constant
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-15);
    }

    #[test]
    fn rejects_below_branch_point() {
        assert!(matches!(lambert_w0(-0.5), Err(NumericsError::Domain(_))));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn residual_on_grid() {
        let mut x = BRANCH;
        while x < 1e6 {
            assert!(residual(x) <= 1e-12 * x.abs().max(1.0), "x = {x}");
            x = if x < 1.0 { x + 1e-3 } else { x * 1.01 };
        }
    }

    proptest! {
        #[test]
        fn residual_bound(x in BRANCH..1e6f64) {
            prop_assert!(residual(x) <= 1e-12 * x.abs().max(1.0));
        }

        #[test]
        fn principal_branch(x in BRANCH..1e3f64) {
            prop_assert!(lambert_w0(x).unwrap() >= -1.0);
        }
    }
}
