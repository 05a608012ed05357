//! Closed forms and condition checks: the overlap necessity test, the
//! Lambert-W per-bit time under an energy budget, marginal completion-time
//! derivatives, limit predictions and optimality diagnostics.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Diagnostic, ProblemInstance, SolveReport};
use crate::numerics::{bisect, kernel, kernel_d1, lambert_w_minus1, snr_for_time, time_per_bit, RootBracket};

/// Outcome of the overlapped-sensing necessity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapVerdict {
    /// Root of `C x / (B log2(1 + x)) = Ē Σγ`; zero when the budget is below
    /// the cooperative Shannon floor and no root exists.
    pub x_star: f64,
    /// `p_max γ_M`.
    pub threshold: f64,
    pub overlap_possible: bool,
}

/// Necessary condition for a positive common task ratio: the SNR the whole
/// fleet can sustain on one shared budget must exceed what the best UAV
/// reaches alone at full power.
pub fn necessity_check(inst: &ProblemInstance) -> OverlapVerdict {
    let m = inst.num_uavs();
    let threshold = inst.p_max() * inst.gamma()[m - 1];
    let k = inst.energy_budget() * inst.gamma_sum() * inst.bandwidth() / inst.c_bits();
    // x / log2(1 + x) increases from ln 2 (x -> 0) without bound.
    let f = |x: f64| x * LN_2 / x.ln_1p() - k;
    if k <= LN_2 {
        return OverlapVerdict {
            x_star: 0.0,
            threshold,
            overlap_possible: false,
        };
    }
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let bracket = RootBracket::new(0.0, hi).with_tol(1e-300, 1e-13);
    let x_star = bisect(|x| if x == 0.0 { LN_2 - k } else { f(x) }, &bracket)
        .expect("x / log2(1 + x) - k changes sign on the bracket");
    OverlapVerdict {
        x_star,
        threshold,
        overlap_possible: x_star > threshold,
    }
}

/// Task ratio at which sending at `p_max` exactly exhausts `e`.
pub fn hat_omega(gamma: f64, inst: &ProblemInstance, e: f64) -> f64 {
    inst.bandwidth() * (inst.p_max() * gamma).ln_1p() / LN_2 * e / (inst.p_max() * inst.c_bits())
}

/// Minimum energy to deliver `ω C` bits over a channel of gain `γ`, reached
/// only as the per-bit time grows without bound.
pub fn shannon_energy_floor(omega: f64, gamma: f64, inst: &ProblemInstance) -> f64 {
    omega * inst.c_bits() * LN_2 / (inst.bandwidth() * gamma)
}

/// Per-bit time and energy relation for one UAV under a budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalCurve {
    pub uav: usize,
    /// Max-power / energy-binding switch point.
    pub hat_omega: f64,
    /// `C ln2 / (B γ e)`; the energy-binding time depends on `A ω` only.
    pub a_coeff: f64,
    gamma: f64,
    energy: f64,
    c_bits: f64,
    bandwidth: f64,
    t_min: f64,
}

/// Which branch of the per-bit time closed form applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeBranch {
    MaxPower,
    EnergyBinding,
}

impl MarginalCurve {
    /// Curve of UAV `m` (sorted index) with budget `e`.
    pub fn new(inst: &ProblemInstance, m: usize, e: f64) -> Result<Self> {
        if m >= inst.num_uavs() {
            return Err(Error::IndexOutOfRange {
                index: m,
                len: inst.num_uavs(),
            });
        }
        Self::for_gain(inst, inst.gamma()[m], e).map(|c| Self { uav: m, ..c })
    }

    /// Curve for an arbitrary gain, sharing the instance's `C`, `B`, `p_max`.
    pub fn for_gain(inst: &ProblemInstance, gamma: f64, e: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain {
                func: "MarginalCurve",
                arg: gamma,
                domain: "gamma > 0",
            });
        }
        if !(e > 0.0) {
            return Err(Error::Domain {
                func: "MarginalCurve",
                arg: e,
                domain: "e > 0",
            });
        }
        Ok(Self {
            uav: 0,
            hat_omega: hat_omega(gamma, inst, e),
            a_coeff: inst.c_bits() * LN_2 / (inst.bandwidth() * gamma * e),
            gamma,
            energy: e,
            c_bits: inst.c_bits(),
            bandwidth: inst.bandwidth(),
            t_min: time_per_bit(inst.p_max() * gamma, inst.bandwidth()),
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Largest ratio this budget can carry at any speed (exclusive).
    pub fn omega_limit(&self) -> f64 {
        1.0 / self.a_coeff
    }

    pub fn branch(&self, omega: f64) -> TimeBranch {
        if omega < self.hat_omega {
            TimeBranch::MaxPower
        } else {
            TimeBranch::EnergyBinding
        }
    }

    fn check(&self, omega: f64) -> Result<()> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::Domain {
                func: "tau_from_energy",
                arg: omega,
                domain: "omega >= 0",
            });
        }
        if self.a_coeff * omega >= 1.0 {
            return Err(Error::Infeasible(format!(
                "budget {} J is below the Shannon floor {} J for ratio {omega}",
                self.energy,
                omega * self.c_bits * LN_2 / (self.bandwidth * self.gamma)
            )));
        }
        Ok(())
    }

    /// Fastest per-bit time that fits the budget.
    pub fn tau(&self, omega: f64) -> Result<f64> {
        self.check(omega)?;
        if omega < self.hat_omega {
            return Ok(self.t_min);
        }
        let a = self.a_coeff * omega;
        let w = lambert_w_minus1(-a * (-a).exp())?;
        let mut tau = -LN_2 / (self.bandwidth * (w + a));
        // Newton polish on g(τ) = eγ/(ωC); the closed form loses digits as
        // `A ω -> 1`.
        let target = self.energy * self.gamma / (omega * self.c_bits);
        for _ in 0..3 {
            let r = kernel(tau, self.bandwidth) - target;
            let next = tau - r / kernel_d1(tau, self.bandwidth);
            if !(next > 0.0) || !next.is_finite() {
                break;
            }
            let r_next = kernel(next, self.bandwidth) - target;
            if r_next.abs() >= r.abs() {
                break;
            }
            tau = next;
        }
        Ok(tau.max(self.t_min))
    }

    /// Energy spent sending `ω C` bits at per-bit time `t`.
    pub fn energy_at(&self, omega: f64, t: f64) -> f64 {
        omega * self.c_bits * kernel(t, self.bandwidth) / self.gamma
    }

    /// Derivative of `C ω τ(ω)`: `C τ_min` below the switch point and
    /// `C (τ - g(τ)/g'(τ))` above it (right derivative at the switch point).
    pub fn marginal(&self, omega: f64) -> Result<f64> {
        let tau = self.tau(omega)?;
        Ok(match self.branch(omega) {
            TimeBranch::MaxPower => self.c_bits * tau,
            TimeBranch::EnergyBinding => self.binding_marginal(tau),
        })
    }

    fn binding_marginal(&self, tau: f64) -> f64 {
        self.c_bits * (tau - kernel(tau, self.bandwidth) / kernel_d1(tau, self.bandwidth))
    }

    /// Left and right derivatives of `C ω τ(ω)`. They differ only at the
    /// switch point, where the curve has a convex kink.
    pub fn marginal_interval(&self, omega: f64) -> Result<(f64, f64)> {
        let right = self.marginal(omega)?;
        if omega > 0.0 && omega == self.hat_omega {
            Ok((self.c_bits * self.t_min, right))
        } else {
            Ok((right, right))
        }
    }

    /// Inverse of [`MarginalCurve::marginal`] on the energy-binding branch:
    /// the ratio whose (right) marginal equals `level`. Returns `None` when
    /// `level` sits in the jump at the switch point or below it.
    pub fn ratio_for_marginal(&self, level: f64) -> Option<f64> {
        let right_at_switch = self.marginal(self.hat_omega).ok()?;
        if level < right_at_switch {
            return None;
        }
        // Marginal grows without bound as ω -> 1/A.
        let lo = self.hat_omega;
        let mut hi_frac = 0.5;
        let limit = self.omega_limit();
        let mut hi = lo + (limit - lo) * hi_frac;
        while self.marginal(hi).ok()? < level {
            hi_frac = 0.5 + 0.5 * hi_frac;
            hi = lo + (limit - lo) * hi_frac;
            if hi_frac > 1.0 - 1e-15 {
                return Some(hi);
            }
        }
        let b = RootBracket::new(lo, hi).with_tol(1e-300, 1e-15);
        bisect(|w| self.marginal(w).map(|v| v - level).unwrap_or(f64::INFINITY), &b).ok()
    }
}

/// Fastest per-bit time for `ω C` bits over gain `γ` with energy `e`.
pub fn tau_from_energy(omega: f64, gamma: f64, e: f64, inst: &ProblemInstance) -> Result<f64> {
    MarginalCurve::for_gain(inst, gamma, e)?.tau(omega)
}

/// `d(C ω τ(ω))/dω` for the budget-constrained per-bit time.
pub fn marginal_time(omega: f64, gamma: f64, inst: &ProblemInstance, e: f64) -> Result<f64> {
    MarginalCurve::for_gain(inst, gamma, e)?.marginal(omega)
}

/// Predicted optimal common ratio in the sensing-cost limits: `Some(1)` when
/// sensing the whole mission is negligible next to the fastest cooperative
/// upload, `Some(0)` when it dominates, `None` in between.
pub fn limit_allocation(inst: &ProblemInstance) -> Option<f64> {
    let rho = inst.beta_s() / (inst.c_bits() * inst.t_c_min());
    if rho <= 1e-4 {
        Some(1.0)
    } else if rho >= 1e2 {
        Some(0.0)
    } else {
        None
    }
}

/// Relative tolerance of the power-relation check.
pub const POWER_RELATION_TOL: f64 = 1e-4;
/// Absolute tolerance (s/bit) of the cooperative-time check.
pub const COOP_TIME_TOL: f64 = 1e-9;
/// Below this common ratio the diagnostics are not applicable.
pub const DIAGNOSTIC_OMEGA0_MIN: f64 = 1e-6;

/// Optimal independent power predicted from the cooperative SNR, the idle
/// window before the next UAV finishes sensing, and `p_max`.
pub fn predicted_independent_power(inst: &ProblemInstance, report: &SolveReport, m: usize) -> f64 {
    let plan = &report.plan;
    let tl = &report.timeline;
    let omega = report.allocation.omega();
    let gamma = inst.gamma();
    let snr_c: f64 = plan.p_c.iter().zip(gamma).map(|(p, g)| p * g).sum();
    let mut bound = (snr_c / gamma[m]).min(inst.p_max());
    if m + 1 < inst.num_uavs() {
        let window = tl.sense_end[m + 1] - tl.tx_start[m];
        if window > 0.0 && omega[m + 1] > 0.0 {
            let p_bar = snr_for_time(window / (omega[m + 1] * inst.c_bits()), inst.bandwidth()) / gamma[m];
            bound = bound.min(p_bar);
        }
    }
    bound
}

/// Checks the structure an optimal solution with overlapped sensing must
/// have: the independent-power relation and the cooperative link being no
/// slower per bit than any independent link. Empty when `ω_0` is negligible.
pub fn optimality_diagnostics(inst: &ProblemInstance, report: &SolveReport) -> Vec<Diagnostic> {
    let omega = report.allocation.omega();
    let mut out = Vec::new();
    if omega[0] <= DIAGNOSTIC_OMEGA0_MIN {
        return out;
    }
    let plan = &report.plan;
    for m in 0..inst.num_uavs() {
        if omega[m + 1] <= 0.0 {
            continue;
        }
        let expected = predicted_independent_power(inst, report, m);
        let residual = (plan.p_n[m] - expected) / expected;
        // A UAV that contributes nothing to the cooperative link is held to
        // the bound only.
        let idle_in_coop = plan.p_c[m] <= 1e-9 * inst.p_max();
        let passed = if idle_in_coop {
            residual <= POWER_RELATION_TOL
        } else {
            residual.abs() <= POWER_RELATION_TOL
        };
        out.push(Diagnostic::new(
            format!("independent_power_relation[{m}]"),
            passed,
            residual,
        ));
    }
    let t_n_min = (0..inst.num_uavs())
        .filter(|&m| omega[m + 1] > 0.0)
        .map(|m| plan.t_n[m])
        .fold(f64::INFINITY, f64::min);
    if t_n_min.is_finite() {
        let residual = plan.t_c - t_n_min;
        out.push(Diagnostic::new(
            "cooperative_time_not_slower",
            residual <= COOP_TIME_TOL,
            residual,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> ProblemInstance {
        ProblemInstance::paper_default()
    }

    #[test]
    fn necessity_examples() {
        let v = necessity_check(&defaults());
        assert!((v.x_star - 1.97e3).abs() / 1.97e3 < 0.01, "{v:?}");
        assert_eq!(v.threshold, 150.0);
        assert!(v.overlap_possible);
        // Root satisfies the defining equation.
        let lhs = 2e7 * v.x_star / (1e5 * (1.0 + v.x_star).log2());
        assert!((lhs - 3.6e4).abs() / 3.6e4 < 1e-10);

        let v = necessity_check(&defaults().with_energy_budget(0.1).unwrap());
        assert!((v.x_star - 126.0).abs() < 1.5, "{v:?}");
        assert!(!v.overlap_possible);

        let v = necessity_check(&defaults().with_energy_budget(0.01).unwrap());
        assert!((v.x_star - 4.4).abs() < 0.1, "{v:?}");
        assert!(!v.overlap_possible);
    }

    #[test]
    fn necessity_below_floor() {
        let v = necessity_check(&defaults().with_energy_budget(1e-3).unwrap());
        assert_eq!(v.x_star, 0.0);
        assert!(!v.overlap_possible);
    }

    #[test]
    fn hat_omega_examples() {
        let inst = defaults();
        let oracle = 1e5 * 91f64.log2() * 1.0 / (0.01 * 2e7);
        assert!((hat_omega(9e3, &inst, 1.0) - oracle).abs() < 1e-12);
        assert!((hat_omega(9e3, &inst, 1.0) - 3.2539).abs() < 1e-4);
        assert!((hat_omega(9e3, &inst, 0.1) - 0.32539).abs() < 1e-5);
        assert_eq!(hat_omega(9e3, &inst, 0.0), 0.0);
    }

    #[test]
    fn tau_examples() {
        let inst = defaults();
        let t = tau_from_energy(0.5, 9e3, 1.0, &inst).unwrap();
        assert!((t - 1.0 / (1e5 * 91f64.log2())).abs() < 1e-18);

        let curve = MarginalCurve::for_gain(&inst, 9e3, 0.02).unwrap();
        assert!((curve.a_coeff - 0.77016).abs() < 1e-5);
        let t = curve.tau(1.0).unwrap();
        // Oracle: bisection on the energy equation in τ.
        let target = 0.02 * 9e3 / 2e7;
        let oracle = bisect(
            |t| kernel(t, 1e5) - target,
            &RootBracket::new(1e-7, 1e-3).with_tol(1e-300, 1e-14),
        )
        .unwrap();
        assert!((t - oracle).abs() / oracle < 1e-10, "{t} vs {oracle}");
        assert!((t - 1.3825e-5).abs() / 1.3825e-5 < 1e-3);
        let e = curve.energy_at(1.0, t);
        assert!((e - 0.02).abs() / 0.02 <= 1e-8);

        let err = tau_from_energy(1.0, 9e3, 0.015, &inst).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        assert!((shannon_energy_floor(1.0, 9e3, &inst) - 0.0154).abs() < 1e-4);
    }

    #[test]
    fn branches_agree_at_switch_point() {
        let inst = defaults();
        for &(g, e) in &[(9e3, 1.0), (1.2e4, 0.05), (1.5e4, 0.3)] {
            let c = MarginalCurve::for_gain(&inst, g, e).unwrap();
            let w = c.hat_omega;
            if c.a_coeff * w >= 1.0 {
                continue;
            }
            let a = c.a_coeff * w;
            let lw = lambert_w_minus1(-a * (-a).exp()).unwrap();
            let binding = -LN_2 / (inst.bandwidth() * (lw + a));
            assert!(
                (binding - c.t_min()).abs() / c.t_min() < 1e-9,
                "{binding} vs {}",
                c.t_min()
            );
        }
    }

    #[test]
    fn marginal_examples() {
        let inst = defaults();
        let m = marginal_time(0.3, 9e3, &inst, 1.0).unwrap();
        assert!((m - 30.73).abs() < 0.01);
        assert_eq!(m, marginal_time(1.7, 9e3, &inst, 1.0).unwrap());

        let curve = MarginalCurve::for_gain(&inst, 9e3, 0.02).unwrap();
        let w = 1.0;
        let h = 1e-7 * w;
        let f = |w: f64| inst.c_bits() * w * curve.tau(w).unwrap();
        let fd = (f(w + h) - f(w - h)) / (2.0 * h);
        let an = curve.marginal(w).unwrap();
        assert!(((fd - an) / an).abs() < 1e-6, "fd={fd} an={an}");
    }

    #[test]
    fn marginal_jumps_up_at_switch_point() {
        // The per-bit time is continuous at the switch point but its slope
        // is not: just above it the budget binds and τ starts to grow.
        let inst = defaults();
        let curve = MarginalCurve::for_gain(&inst, 9e3, 0.1).unwrap();
        let w = curve.hat_omega;
        let below = curve.marginal(w - 1e-9).unwrap();
        let above = curve.marginal(w + 1e-9).unwrap();
        assert!(above > below);
        let f = |x: f64| inst.c_bits() * x * curve.tau(x).unwrap();
        let h = 1e-6 * w;
        let left_fd = (f(w) - f(w - h)) / h;
        let right_fd = (f(w + h) - f(w)) / h;
        assert!(((left_fd - below) / below).abs() < 1e-6);
        assert!(((right_fd - above) / above).abs() < 1e-5);
        let (l, r) = curve.marginal_interval(w).unwrap();
        assert!((l - below).abs() / below < 1e-9 && (r - above).abs() / above < 1e-6);
    }

    #[test]
    fn ratio_for_marginal_inverts() {
        let inst = defaults();
        let curve = MarginalCurve::for_gain(&inst, 1.2e4, 0.05).unwrap();
        let w = curve.hat_omega * 1.7;
        let level = curve.marginal(w).unwrap();
        let back = curve.ratio_for_marginal(level).unwrap();
        assert!((back - w).abs() / w < 1e-10);
        assert!(curve
            .ratio_for_marginal(curve.c_bits * curve.t_min() * 1.0001)
            .is_none());
    }

    #[test]
    fn limit_examples() {
        let inst = defaults();
        assert_eq!(limit_allocation(&inst.with_beta_s(1e-6).unwrap()), Some(1.0));
        assert_eq!(limit_allocation(&inst.with_beta_s(1e4).unwrap()), Some(0.0));
        assert_eq!(limit_allocation(&inst), None);
    }
}
