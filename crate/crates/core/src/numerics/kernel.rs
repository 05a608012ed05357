//! The per-bit energy/time kernel `g(t) = t (2^{1/(B t)} - 1)`.
//!
//! Sending one bit in `t` seconds over a channel with normalized gain `γ`
//! costs `g(t) / γ` joules, so `g` is the shape of every energy constraint.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};

fn check_time(func: &'static str, t: f64, bandwidth: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain {
            func,
            arg: t,
            domain: "t > 0",
        });
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Domain {
            func,
            arg: bandwidth,
            domain: "B > 0",
        });
    }
    Ok(())
}

/// `g(t) = t (2^{1/(B t)} - 1)`.
pub fn energy_time_kernel(t: f64, bandwidth: f64) -> Result<f64> {
    check_time("energy_time_kernel", t, bandwidth)?;
    Ok(kernel(t, bandwidth))
}

/// `g'(t)`, negative for every `t > 0`.
pub fn energy_time_kernel_deriv(t: f64, bandwidth: f64) -> Result<f64> {
    check_time("energy_time_kernel_deriv", t, bandwidth)?;
    Ok(kernel_d1(t, bandwidth))
}

#[inline]
pub(crate) fn kernel(t: f64, bandwidth: f64) -> f64 {
    t * (LN_2 / (bandwidth * t)).exp_m1()
}

#[inline]
pub(crate) fn kernel_d1(t: f64, bandwidth: f64) -> f64 {
    let u = LN_2 / (bandwidth * t);
    u.exp_m1() - u * u.exp()
}

/// `g''(t)`, positive for every `t > 0` (convexity).
#[cfg(test)]
fn kernel_d2(t: f64, bandwidth: f64) -> f64 {
    let u = LN_2 / (bandwidth * t);
    u * u * u.exp() / t
}

/// Per-bit time at SNR `snr`: `1 / (B log2(1 + snr))`.
#[inline]
pub fn time_per_bit(snr: f64, bandwidth: f64) -> f64 {
    LN_2 / (bandwidth * snr.ln_1p())
}

/// SNR needed to send one bit in `t` seconds: `2^{1/(B t)} - 1`.
#[inline]
pub fn snr_for_time(t: f64, bandwidth: f64) -> f64 {
    (LN_2 / (bandwidth * t)).exp_m1()
}
