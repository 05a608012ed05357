//! Optimal allocation without a common task (`ω_0 = 0`).
//!
//! With no cooperative upload every UAV spends its whole budget on its own
//! data, so UAV `m` needs `f_m(ω) = C ω τ_m(ω)` seconds, a convex increasing
//! function of its ratio. The completion time is
//! `T = max_k (β ω_k + Σ_{j>=k} f_j(ω_j))`, and the optimum is found by a
//! double bisection: an outer search on `ω_1`, and for each `ω_1` a chain
//! that fixes `ω_2, …, ω_M` one at a time from the optimality conditions.
//!
//! Along the chain a marginal *level* is carried: the price, in seconds of
//! mission time per unit ratio, that the next UAV's marginal upload time must
//! match. UAV 1 starts it at `β + f_1'(ω_1)`. For each following UAV either
//! its sensing end is pinned to the moment the previous upload ends
//! (causality binding, the level drops), or its marginal equals the level
//! (causality slack, the level carries over).

use serde::{Deserialize, Serialize};

use crate::analysis::MarginalCurve;
use crate::error::{Error, Result};
use crate::model::{
    evaluate_timeline, fill_idle_gaps, Diagnostic, ProblemInstance, SolveReport, TaskAllocation, TransmissionPlan,
};
use crate::numerics::snr_for_time;

/// Which condition fixed a UAV's ratio in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainBranch {
    /// Ratio below the switch point; transmitting at `p_max`.
    MaxPower,
    /// Budget exhausted; per-bit time from the Lambert-W closed form.
    EnergyBinding,
    /// Sensing ends exactly when the previous UAV finishes uploading.
    CausalityBinding,
}

/// One link of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub omega: f64,
    pub branch: ChainBranch,
    /// Marginal level handed to the next UAV.
    pub level: f64,
}

/// Ratios and instants of the UAVs fixed so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub omega: Vec<f64>,
    /// Upload start instants.
    pub t_max: Vec<f64>,
    /// Upload durations.
    pub t_n: Vec<f64>,
    pub branch: Vec<ChainBranch>,
    pub level: Vec<f64>,
}

fn curves(inst: &ProblemInstance) -> Result<Vec<MarginalCurve>> {
    (0..inst.num_uavs())
        .map(|m| MarginalCurve::new(inst, m, inst.energy_budget()))
        .collect()
}

fn free_branch(curve: &MarginalCurve, omega: f64) -> ChainBranch {
    if omega < curve.hat_omega {
        ChainBranch::MaxPower
    } else {
        ChainBranch::EnergyBinding
    }
}

/// Largest ratio whose left marginal does not exceed `level`.
fn ratio_for_level(curve: &MarginalCurve, level: f64, c_bits: f64) -> f64 {
    let flat = c_bits * curve.t_min();
    if level < flat {
        return 0.0;
    }
    match curve.ratio_for_marginal(level) {
        Some(w) => w,
        // Level falls inside the jump at the switch point.
        None => curve.hat_omega,
    }
}

impl ChainState {
    /// Chain holding UAV 1 only.
    pub fn start(inst: &ProblemInstance, omega_1: f64) -> Result<Self> {
        let curve = MarginalCurve::new(inst, 0, inst.energy_budget())?;
        let tau = curve.tau(omega_1)?;
        let (_, right) = curve.marginal_interval(omega_1)?;
        Ok(Self {
            omega: vec![omega_1],
            t_max: vec![inst.beta_s() * omega_1],
            t_n: vec![inst.c_bits() * omega_1 * tau],
            branch: vec![free_branch(&curve, omega_1)],
            level: vec![inst.beta_s() + right],
        })
    }

    /// Chain holding UAV 1 at ratio `omega_1` with marginal `g_1` taken
    /// from its subdifferential.
    pub fn start_with(inst: &ProblemInstance, omega_1: f64, g_1: f64) -> Result<Self> {
        let mut state = Self::start(inst, omega_1)?;
        state.level[0] = inst.beta_s() + g_1;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn push(&mut self, inst: &ProblemInstance, step: ChainStep) -> Result<()> {
        let m = self.len();
        let curve = MarginalCurve::new(inst, m, inst.energy_budget())?;
        let tau = curve.tau(step.omega)?;
        let start = self.t_max[m - 1] + self.t_n[m - 1];
        self.omega.push(step.omega);
        self.t_max.push(start.max(inst.beta_s() * step.omega));
        self.t_n.push(inst.c_bits() * step.omega * tau);
        self.branch.push(step.branch);
        self.level.push(step.level);
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.omega.iter().sum()
    }
}

/// Ratio of UAV `m + 1` given the chain up to UAV `m` (0-based).
pub fn next_ratio(m: usize, state: &ChainState, inst: &ProblemInstance) -> Result<ChainStep> {
    let beta = inst.beta_s();
    if !(beta > 0.0) {
        return Err(Error::InvalidInstance(
            "causality bound is undefined without sensing cost (beta_s = 0)".into(),
        ));
    }
    if m + 1 >= inst.num_uavs() || m >= state.len() {
        return Err(Error::IndexOutOfRange {
            index: m + 1,
            len: inst.num_uavs().min(state.len() + 1),
        });
    }
    let c = inst.c_bits();
    let next = MarginalCurve::new(inst, m + 1, inst.energy_budget())?;
    let level = state.level[m];
    let bound = (state.t_max[m] + state.t_n[m]) / beta;

    // Equal marginals on the energy-binding branch mean equal per-bit
    // times, i.e. equal ω/γ. Only valid when the level is UAV `m`'s own
    // marginal, i.e. it sits strictly past its switch point.
    let own = m > 0
        && state.branch[m] == ChainBranch::EnergyBinding
        && state.omega[m] > MarginalCurve::new(inst, m, inst.energy_budget())?.hat_omega;
    let free = if own {
        let w = state.omega[m] * inst.gamma()[m + 1] / inst.gamma()[m];
        if w >= next.hat_omega && w < next.omega_limit() {
            w
        } else {
            ratio_for_level(&next, level, c)
        }
    } else {
        ratio_for_level(&next, level, c)
    };

    if free < bound {
        return Ok(ChainStep {
            omega: free,
            branch: free_branch(&next, free),
            level,
        });
    }
    // Causality binds; the optimality multiplier of the new binding
    // constraint lowers the level seen downstream.
    let (_, right) = next.marginal_interval(bound)?;
    let g = right.min(level);
    Ok(ChainStep {
        omega: bound,
        branch: ChainBranch::CausalityBinding,
        level: level * (g + beta) / (beta + level),
    })
}

fn build_chain(inst: &ProblemInstance, omega_1: f64, stop_above: f64) -> Result<ChainState> {
    extend_chain(inst, ChainState::start(inst, omega_1)?, stop_above)
}

fn extend_chain(inst: &ProblemInstance, mut state: ChainState, stop_above: f64) -> Result<ChainState> {
    for m in state.len() - 1..inst.num_uavs() - 1 {
        let step = next_ratio(m, &state, inst)?;
        state.push(inst, step)?;
        if state.sum() > stop_above {
            break;
        }
    }
    Ok(state)
}

/// Total ratio implied by the chain started at `ω_1`; increasing in `ω_1`.
pub fn sum_ratio_curve(omega_1: f64, inst: &ProblemInstance) -> Result<f64> {
    Ok(build_chain(inst, omega_1, f64::INFINITY)?.sum())
}

/// Subdifferential `[left, right]` of `f_m` at `omega`, treating ratios
/// within a relative `1e-9` of the switch point as sitting on it.
fn subdifferential(curve: &MarginalCurve, omega: f64, c_bits: f64) -> Result<(f64, f64)> {
    let hat = curve.hat_omega;
    if omega <= 0.0 {
        return Ok((f64::NEG_INFINITY, curve.marginal(0.0)?));
    }
    if (omega - hat).abs() <= 1e-9 * hat {
        return Ok((c_bits * curve.t_min(), curve.marginal(omega.max(hat))?));
    }
    curve.marginal_interval(omega)
}

/// Point `(ω, g)` on the graph of UAV 1's subdifferential with
/// `ω + g / k = s`. The graph is a monotone curve, so this
/// parametrization is continuous across both the flat max-power stretch
/// and the jump at the switch point.
fn graph_point(curve: &MarginalCurve, s: f64, k: f64, cap: f64, c_bits: f64) -> Result<(f64, f64)> {
    let flat = c_bits * curve.t_min();
    let hat = curve.hat_omega;
    let below = s - flat / k;
    if below <= 0.0 {
        return Ok((0.0, k * s));
    }
    if hat >= cap || below < hat {
        return Ok((below.min(cap), flat));
    }
    let right_hat = curve.marginal(hat)?;
    if s <= hat + right_hat / k {
        return Ok((hat, k * (s - hat)));
    }
    let h = |w: f64| curve.marginal(w).map(|g| w + g / k - s);
    if h(cap)? <= 0.0 {
        return Ok((cap, curve.marginal(cap)?));
    }
    let (mut lo, mut hi) = (hat, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, curve.marginal(hi)?))
}

/// Optimal allocation with `ω_0 = 0`.
pub fn solve_degenerate(inst: &ProblemInstance) -> Result<SolveReport> {
    let m = inst.num_uavs();
    if m == 1 {
        let alloc = TaskAllocation::new(vec![0.0, 1.0])?;
        return finish(inst, alloc, 0);
    }
    if !(inst.beta_s() > 0.0) {
        return Err(Error::InvalidInstance(
            "allocation without a common task needs beta_s > 0; use the overlapped solver".into(),
        ));
    }
    let curves = curves(inst)?;
    let c = inst.c_bits();
    let cap = 1f64.min(curves[0].omega_limit() * (1.0 - 1e-12));
    let k = inst.beta_s() + c * curves[0].t_min();
    let chain = |s: f64, stop: f64| -> Result<ChainState> {
        let (w, g) = graph_point(&curves[0], s, k, cap, c)?;
        extend_chain(inst, ChainState::start_with(inst, w, g)?, stop)
    };
    let total = |s: f64| chain(s, 1.0 + 1e-9).map(|st| st.sum());
    let s_cap = cap + curves[0].marginal(cap)? / k;
    let s_hi = total(s_cap)?;
    if s_hi < 1.0 {
        return Err(Error::Infeasible(format!(
            "no allocation without a common task fits the budget: ratio sum {} at omega_1 = 0, {s_hi} at omega_1 = {cap}",
            sum_ratio_curve(0.0, inst).unwrap_or(0.0)
        )));
    }
    let (mut lo, mut hi) = (0.0, s_cap);
    let mut iterations = 0;
    while iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid)? > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let mut below = chain(lo, f64::INFINITY)?;
    let mut state = chain(hi, f64::INFINITY)?;
    // `s` carries ω_1 only as a small difference on long chains with tiny
    // leading ratios; once both ends sit on one smooth piece of UAV 1's
    // curve, finish the search on ω_1 itself.
    let (w_lo, w_hi) = (below.omega[0], state.omega[0]);
    let hat = curves[0].hat_omega;
    if (state.sum() - 1.0).abs() > 1e-12 && w_lo < w_hi && (w_hi < hat || w_lo > hat) {
        let by_omega = |w: f64| extend_chain(inst, ChainState::start(inst, w)?, f64::INFINITY);
        let (mut lo, mut hi) = (w_lo, w_hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if by_omega(mid)?.sum() > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
        below = by_omega(lo)?;
        state = by_omega(hi)?;
    }
    if (state.sum() - 1.0).abs() > 1e-12 {
        state = settle_jump(inst, &below, state)?;
    }
    let mut omega = vec![0.0];
    omega.extend_from_slice(&state.omega);
    let head: f64 = omega[..m].iter().sum();
    omega[m] = (1.0 - head).max(0.0);
    let alloc = TaskAllocation::new(omega)?;
    finish(inst, alloc, iterations)
}

/// The outer search can converge onto a jump of the ratio sum: a UAV whose
/// causality bound sits on its switch point admits any level between the
/// two one-sided values, and which one the chain picks flips across the
/// jump. Pick the level inside that interval that makes the ratios sum to
/// one.
fn settle_jump(inst: &ProblemInstance, below: &ChainState, above: ChainState) -> Result<ChainState> {
    let n = below.len().min(above.len());
    let Some(j) = (1..n).find(|&j| (below.level[j] - above.level[j]).abs() > 1e-9 * above.level[j]) else {
        return Ok(above);
    };
    let tail = |level: f64| -> Result<ChainState> {
        let mut st = above.clone();
        st.omega.truncate(j + 1);
        st.t_max.truncate(j + 1);
        st.t_n.truncate(j + 1);
        st.branch.truncate(j + 1);
        st.level.truncate(j + 1);
        st.level[j] = level;
        extend_chain(inst, st, f64::INFINITY)
    };
    let (mut lo, mut hi) = (below.level[j].min(above.level[j]), below.level[j].max(above.level[j]));
    if tail(hi)?.sum() < 1.0 || tail(lo)?.sum() > 1.0 {
        return Ok(above);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail(mid)?.sum() > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    tail(hi)
}

/// Independent-only plan for an allocation: each UAV at its fastest
/// budget-feasible per-bit time.
pub(crate) fn independent_plan(inst: &ProblemInstance, omega: &[f64]) -> Result<TransmissionPlan> {
    let m = inst.num_uavs();
    let curves = curves(inst)?;
    let mut t_n = vec![0.0; m];
    let mut p_n = vec![inst.p_max(); m];
    for i in 0..m {
        let w = omega[i + 1];
        t_n[i] = curves[i].tau(w)?;
        if w >= curves[i].hat_omega {
            p_n[i] = (snr_for_time(t_n[i], inst.bandwidth()) / inst.gamma()[i]).min(inst.p_max());
        }
    }
    let mut plan = TransmissionPlan {
        t_n,
        t_c: inst.t_c_min(),
        p_n,
        p_c: vec![0.0; m],
        e_c: vec![0.0; m],
    };
    fill_idle_gaps(inst, omega, &mut plan);
    Ok(plan)
}

fn finish(inst: &ProblemInstance, alloc: TaskAllocation, iterations: usize) -> Result<SolveReport> {
    let plan = independent_plan(inst, alloc.omega())?;
    let timeline = evaluate_timeline(inst, &alloc, &plan)?;
    let diagnostics = optimality_certificate(inst, &alloc)?;
    Ok(SolveReport {
        scheme: "degenerate".into(),
        allocation: alloc,
        plan,
        timeline,
        iterations,
        bound_gap: 0.0,
        diagnostics,
    })
}

/// Relative tolerance of the certificate checks.
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Checks the adjacent-pair optimality conditions of an allocation without
/// a common task: for each pair either causality is tight and the next
/// UAV's marginal does not exceed the carried level, or causality is slack
/// and the next UAV's marginal equals the level. Recomputed from the
/// allocation alone.
pub fn optimality_certificate(inst: &ProblemInstance, alloc: &TaskAllocation) -> Result<Vec<Diagnostic>> {
    let m = inst.num_uavs();
    let omega = alloc.omega();
    let beta = inst.beta_s();
    let curves = curves(inst)?;
    let plan = independent_plan(inst, omega)?;
    let tl = evaluate_timeline(inst, alloc, &plan)?;
    let mut out = Vec::new();
    let c = inst.c_bits();
    // UAV 1 may sit on a kink, so carry the whole interval of admissible
    // levels; the level update is monotone, so endpoints map to endpoints.
    let (left, right) = subdifferential(&curves[0], omega[1], c)?;
    let (mut lo, mut hi) = (beta + left.max(0.0), beta + right);
    let update = |l: f64, right: f64| l * (right.min(l) + beta) / (beta + l);
    let time_tol = 1e-9 * (1.0 + tl.total_t);
    for i in 0..m.saturating_sub(1) {
        let w = omega[i + 2];
        let (left, right) = subdifferential(&curves[i + 1], w, c)?;
        let free_end = tl.tx_start[i] + omega[i + 1] * c * plan.t_n[i];
        let tight = (tl.sense_end[i + 1] - free_end).abs() <= time_tol;
        let tol = CERTIFICATE_TOL * (1.0 + hi);
        if tight {
            // Next UAV's marginal must not exceed the level.
            let residual = (left - hi).max(0.0);
            out.push(Diagnostic::new(
                format!("pair[{i}]: causality tight"),
                residual <= tol,
                residual,
            ));
            lo = lo.max(left).min(hi);
            // On a kink any multiplier between the one-sided marginals is
            // admissible; the update is increasing in both arguments.
            (lo, hi) = (update(lo, left.max(0.0)), update(hi, right));
        } else {
            // Level must lie in the next UAV's subdifferential.
            let residual = if hi < left {
                hi - left
            } else if lo > right {
                lo - right
            } else {
                0.0
            };
            out.push(Diagnostic::new(
                format!("pair[{i}]: marginal equality"),
                residual.abs() <= tol,
                residual,
            ));
            let nlo = lo.max(left).min(right);
            let nhi = hi.min(right).max(left);
            (lo, hi) = (nlo.min(nhi), nhi.max(nlo));
        }
    }
    Ok(out)
}
