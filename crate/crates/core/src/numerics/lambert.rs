//! Real branches of the Lambert-W function.
//!
//! Both branches start from a series or asymptotic seed, refine with Halley
//! steps, and fall back to bisection on `w e^w = y` if the iteration leaves
//! its branch.

use std::f64::consts::E;

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;
/// Slack accepted below the branch point before reporting a domain error.
const BRANCH_SLACK: f64 = 1e-15;
/// Below this value of `2(1 + e y)` the branch-point series is accurate to
/// machine precision and Halley's method is badly conditioned.
const SERIES_CUTOFF: f64 = 1e-6;

fn branch_series(p: f64) -> f64 {
    // W = -1 + p - p^2/3 + 11/72 p^3 - 43/540 p^4 + 769/17280 p^5 - ...
    -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0)))))
}

fn halley(mut w: f64, y: f64) -> f64 {
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// Bisection on `h(w) = w e^w - y`, which is monotone on each branch.
fn bisect_branch(y: f64, mut lo: f64, mut hi: f64) -> f64 {
    let h = |w: f64| w * w.exp() - y;
    let h_lo = h(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (h(mid) > 0.0) == (h_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_lower(func: &'static str, y: f64, domain: &'static str) -> Result<f64> {
    if !y.is_finite() || y < -INV_E - BRANCH_SLACK {
        return Err(Error::Domain { func, arg: y, domain });
    }
    Ok(y.max(-INV_E))
}

/// Lower real branch `W_{-1}` on `[-1/e, 0)`; returns `w <= -1`.
pub fn lambert_w_minus1(y: f64) -> Result<f64> {
    const DOMAIN: &str = "[-1/e, 0)";
    let y = check_lower("lambert_w_minus1", y, DOMAIN)?;
    if y >= 0.0 {
        return Err(Error::Domain {
            func: "lambert_w_minus1",
            arg: y,
            domain: DOMAIN,
        });
    }
    let p2 = 2.0 * (E * y + 1.0);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }
    if p2 < SERIES_CUTOFF {
        return Ok(branch_series(-p2.sqrt()));
    }

    let seed = if y > -0.25 {
        let l1 = (-y).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    } else {
        branch_series(-p2.sqrt())
    };
    let w = halley(seed.min(-1.0), y);
    if w.is_finite() && w <= -1.0 && (w * w.exp() - y).abs() <= 1e-12 * y.abs() {
        return Ok(w);
    }

    // Fallback: bracket the root on (-inf, -1].
    let mut lo: f64 = -2.0;
    while lo * lo.exp() <= y && lo > -800.0 {
        lo *= 2.0;
    }
    Ok(bisect_branch(y, lo, -1.0))
}

/// Principal real branch `W_0` on `[-1/e, inf)`; returns `w >= -1`.
pub fn lambert_w0(y: f64) -> Result<f64> {
    let y = check_lower("lambert_w0", y, "[-1/e, inf)")?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let p2 = 2.0 * (E * y + 1.0);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }
    if p2 < SERIES_CUTOFF {
        return Ok(branch_series(p2.sqrt()));
    }

    let seed = if y > E {
        let l1 = y.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    } else if p2 < 0.25 {
        branch_series(p2.sqrt())
    } else {
        // Winitzki's approximation.
        let l = y.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    };
    let w = halley(seed.max(-1.0), y);
    if w.is_finite() && w >= -1.0 && (w * w.exp() - y).abs() <= 1e-12 * y.abs().max(1e-300) {
        return Ok(w);
    }

    let mut hi = 1.0_f64.max(y.ln());
    while hi * hi.exp() < y {
        hi *= 2.0;
    }
    Ok(bisect_branch(y, -1.0, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minus1_branch_point() {
        assert_eq!(lambert_w_minus1(-INV_E).unwrap(), -1.0);
        // One ulp below the branch point is inside the slack.
        let w = lambert_w_minus1(-INV_E - 1e-16).unwrap();
        assert!((w + 1.0).abs() < 1e-7);
    }

    #[test]
    fn minus1_identity_at_minus_two() {
        let y = -2.0 * (-2.0_f64).exp();
        assert!((y + 0.270671).abs() < 1e-6);
        let w = lambert_w_minus1(y).unwrap();
        assert!((w + 2.0).abs() < 1e-13, "{w}");
    }

    #[test]
    fn minus1_against_bisection_value() {
        // Frozen from bisection of w e^w = -0.35654 over [-10, -1].
        let w = lambert_w_minus1(-0.35654).unwrap();
        let oracle = {
            let (mut lo, mut hi) = (-10.0_f64, -1.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid * mid.exp() > -0.35654 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        assert!((w - oracle).abs() < 1e-12);
        assert!((w + 1.2715).abs() < 1e-4, "{w}");
    }

    #[test]
    fn minus1_domain_errors() {
        assert!(lambert_w_minus1(0.0).is_err());
        assert!(lambert_w_minus1(0.1).is_err());
        assert!(lambert_w_minus1(-0.5).is_err());
        assert!(lambert_w_minus1(f64::NAN).is_err());
    }

    #[test]
    fn minus1_tiny_argument() {
        let y = -1e-200;
        let w = lambert_w_minus1(y).unwrap();
        assert!(((w * w.exp() - y) / y).abs() < 1e-12);
    }

    #[test]
    fn w0_special_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(lambert_w0(-INV_E).unwrap(), -1.0);
        assert!(lambert_w0(-0.4).is_err());
    }

    #[test]
    fn w0_round_trip() {
        for i in 0..=400 {
            let x = -1.0 + i as f64 * 0.05;
            let y = x * x.exp();
            let w = lambert_w0(y).unwrap();
            assert!((w - x).abs() <= 1e-10 * (1.0 + x.abs()), "x={x} w={w}");
        }
    }

    #[test]
    fn branches_split_at_minus_one() {
        let y = -0.2;
        let lo = lambert_w_minus1(y).unwrap();
        let hi = lambert_w0(y).unwrap();
        assert!(lo < -1.0 && hi > -1.0);
        assert!((lo * lo.exp() - y).abs() < 1e-15);
        assert!((hi * hi.exp() - y).abs() < 1e-15);
    }
}
