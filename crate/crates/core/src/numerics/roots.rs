use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bracket and stopping rule for scalar root finding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            tol_abs: 1e-14,
            tol_rel: 1e-13,
            max_iter: 300,
        }
    }

    pub fn with_tol(mut self, tol_abs: f64, tol_rel: f64) -> Self {
        self.tol_abs = tol_abs;
        self.tol_rel = tol_rel;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo < self.hi
            && self.tol_abs > 0.0
            && self.tol_rel > 0.0
            && self.max_iter >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid root bracket {self:?}")))
        }
    }

    fn converged(&self, lo: f64, hi: f64) -> bool {
        let mid = 0.5 * (lo + hi);
        hi - lo <= self.tol_abs + self.tol_rel * mid.abs()
    }
}

/// Bisection for a continuous function with a sign change on the bracket.
pub fn bisect<F>(f: F, bracket: &RootBracket) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    bracket.validate()?;
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..bracket.max_iter {
        if bracket.converged(lo, hi) {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket is down to adjacent floats.
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if bracket.converged(lo, hi) {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::MaxIterations {
        what: "bisection",
        iterations: bracket.max_iter,
    })
}

/// Newton's method kept inside a bisection bracket (the classic `rtsafe`).
///
/// `fdf` returns the value and derivative. Any step that leaves the bracket,
/// or fails to halve it, is replaced by a bisection step.
pub fn safeguarded_newton<F>(fdf: F, bracket: &RootBracket) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    bracket.validate()?;
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let (f_lo, _) = fdf(lo);
    let (f_hi, _) = fdf(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    // Orient so that f(lo) < 0.
    if f_lo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut f, mut df) = fdf(x);
    for _ in 0..bracket.max_iter {
        let newton_out = ((x - hi) * df - f) * ((x - lo) * df - f) > 0.0;
        let slow = (2.0 * f).abs() > (dx_old * df).abs();
        dx_old = dx;
        if newton_out || slow || !df.is_finite() || df == 0.0 {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx = f / df;
            x -= dx;
        }
        if dx.abs() <= bracket.tol_abs + bracket.tol_rel * x.abs() {
            return Ok(x);
        }
        let (fx, dfx) = fdf(x);
        f = fx;
        df = dfx;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    Err(Error::MaxIterations {
        what: "safeguarded Newton",
        iterations: bracket.max_iter,
    })
}
