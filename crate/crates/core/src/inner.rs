//! Optimal per-bit times, powers and cooperative energy split for a fixed
//! task allocation.
//!
//! The subproblem is convex once written in the variables
//!
//! * `x_m = t^n_m / t^n_min,m >= 1` (independent per-bit time, scaled),
//! * `x_c = t^c / t^c_min >= 1` (cooperative per-bit time, scaled),
//! * `e_m = E^c_m / (ω_0 C t^c_min p_max) >= 0` (cooperative energy, scaled),
//! * `ζ >= T / T_ref` (epigraph of the completion time),
//!
//! where every constraint is either linear or a scaled copy of the convex
//! kernel `g(t) = t (2^{1/(Bt)} - 1)`. It is solved by a primal log-barrier
//! method with damped Newton steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fill_idle_gaps, timeline_raw, ProblemInstance, TaskAllocation, TransmissionPlan};
use crate::numerics::{snr_for_time, time_per_bit};

/// Ratios below this are treated as carrying no data.
pub(crate) const ACTIVE_OMEGA: f64 = 1e-12;

/// Accuracy and effort limits of the barrier method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerOptions {
    /// Stop when the duality gap is below `tol · (1 + T)` seconds.
    pub tol: f64,
    /// Cap on Newton steps over all barrier stages.
    pub max_newton_steps: usize,
    /// Barrier parameter growth factor.
    pub mu: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_newton_steps: 200,
            mu: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSolution {
    pub plan: TransmissionPlan,
    pub objective_t: f64,
    /// Duality gap bound divided by `1 + T`.
    pub kkt_residual: f64,
    pub converged: bool,
    pub newton_steps: usize,
}

/// Optimal plan for `alloc` with default options.
pub fn solve_inner(inst: &ProblemInstance, alloc: &TaskAllocation) -> Result<InnerSolution> {
    solve_inner_with(inst, alloc, &InnerOptions::default())
}

pub fn solve_inner_with(inst: &ProblemInstance, alloc: &TaskAllocation, opts: &InnerOptions) -> Result<InnerSolution> {
    if alloc.num_uavs() != inst.num_uavs() {
        return Err(Error::DimensionMismatch {
            what: "allocation",
            got: alloc.num_uavs(),
            expected: inst.num_uavs(),
        });
    }
    let sol = solve_inner_raw(inst, alloc.omega(), opts)?;
    if !sol.converged {
        return Err(Error::MaxIterations {
            what: "inner barrier solver",
            iterations: sol.newton_steps,
        });
    }
    Ok(sol)
}

/// Cooperative powers from the energy split: `p^c_m = E^c_m / (C ω_0 t^c)`.
pub fn recover_coop_power(e_c: &[f64], t_c: f64, alloc: &TaskAllocation, inst: &ProblemInstance) -> Result<Vec<f64>> {
    if e_c.len() != inst.num_uavs() {
        return Err(Error::DimensionMismatch {
            what: "cooperative energies",
            got: e_c.len(),
            expected: inst.num_uavs(),
        });
    }
    let w0 = alloc.common();
    if !(w0 > 0.0) {
        return Err(Error::Domain {
            func: "recover_coop_power",
            arg: w0,
            domain: "omega_0 > 0",
        });
    }
    if !(t_c > 0.0) {
        return Err(Error::Domain {
            func: "recover_coop_power",
            arg: t_c,
            domain: "t_c > 0",
        });
    }
    Ok(e_c.iter().map(|e| e / (inst.c_bits() * w0 * t_c)).collect())
}

/// Scaled kernel `G(x) = x (e^{L/x} - 1) / (e^L - 1)`, with `G(1) = 1`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    l: f64,
    d: f64,
}

impl Scaled {
    fn new(snr_max: f64) -> Self {
        Self {
            l: snr_max.ln_1p(),
            d: snr_max,
        }
    }
    fn g(&self, x: f64) -> f64 {
        x * (self.l / x).exp_m1() / self.d
    }
    fn d1(&self, x: f64) -> f64 {
        let u = self.l / x;
        (u.exp_m1() - u * u.exp()) / self.d
    }
    fn d2(&self, x: f64) -> f64 {
        let u = self.l / x;
        u * u * u.exp() / (x * self.d)
    }
    /// `lim_{x->inf} G(x)`.
    fn floor(&self) -> f64 {
        self.l / self.d
    }
    /// Smallest `x >= 1` with `G(x) <= level` (level must exceed the floor).
    fn solve(&self, level: f64) -> f64 {
        if self.g(1.0) <= level {
            return 1.0;
        }
        let mut hi = 2.0;
        while self.g(hi) > level {
            hi *= 2.0;
        }
        let mut lo = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.g(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// The barrier problem for one allocation.
struct Barrier {
    m: usize,
    /// Variable index of `x_m`, if UAV `m` carries data.
    x_var: Vec<Option<usize>>,
    coop: bool,
    n: usize,
    kappa: Vec<f64>,
    ind: Vec<Scaled>,
    kappa0: f64,
    co: Scaled,
    w: Vec<f64>,
    /// Epigraph slopes: seconds per unit of `x_m` (scaled by `1/T_ref`).
    a: Vec<f64>,
    a_c: f64,
    /// Epigraph constants per start index `k`.
    c: Vec<f64>,
    t_ref: f64,
}

impl Barrier {
    fn xc(&self) -> usize {
        self.n_ind()
    }
    fn n_ind(&self) -> usize {
        self.x_var.iter().filter(|v| v.is_some()).count()
    }
    fn e(&self, m: usize) -> usize {
        self.n_ind() + 1 + m
    }
    fn zeta(&self) -> usize {
        self.n - 1
    }

    fn num_constraints(&self) -> usize {
        let mut k = self.n_ind() + self.m + self.m; // floors, energy, epigraph
        if self.coop {
            k += 1 + 1 + 2 * self.m; // x_c floor, aggregate, e bounds
        }
        k
    }

    /// Calls `visit(value, gradient, diagonal_hessian)` for each constraint.
    ///
    /// Times are stored as offsets `u = x - 1` and the epigraph variable as
    /// `δ = ζ - 1` so that slacks near the max-power point keep full
    /// precision.
    fn for_each(&self, z: &[f64], mut visit: impl FnMut(f64, &[(usize, f64)], Option<(usize, f64)>)) {
        let mut grad: Vec<(usize, f64)> = Vec::with_capacity(self.m + 3);
        for m in 0..self.m {
            if let Some(i) = self.x_var[m] {
                visit(-z[i], &[(i, -1.0)], None);
            }
        }
        if self.coop {
            let xc = self.xc();
            visit(-z[xc], &[(xc, -1.0)], None);
        }
        for m in 0..self.m {
            grad.clear();
            let mut val = -1.0;
            let mut hess = None;
            if let Some(i) = self.x_var[m] {
                let s = &self.ind[m];
                let x = 1.0 + z[i];
                val += self.kappa[m] * s.g(x);
                grad.push((i, self.kappa[m] * s.d1(x)));
                hess = Some((i, self.kappa[m] * s.d2(x)));
            }
            if self.coop {
                val += self.kappa0 * z[self.e(m)];
                grad.push((self.e(m), self.kappa0));
            }
            visit(val, &grad, hess);
        }
        if self.coop {
            let xc = self.xc();
            let x = 1.0 + z[xc];
            grad.clear();
            let mut val = self.co.g(x);
            grad.push((xc, self.co.d1(x)));
            for m in 0..self.m {
                val -= self.w[m] * z[self.e(m)];
                grad.push((self.e(m), -self.w[m]));
            }
            visit(val, &grad, Some((xc, self.co.d2(x))));
            for m in 0..self.m {
                let e = self.e(m);
                visit((z[e] - 1.0) - z[xc], &[(e, 1.0), (xc, -1.0)], None);
                visit(-z[e], &[(e, -1.0)], None);
            }
        }
        let zeta = self.zeta();
        for k in 0..self.m {
            grad.clear();
            let mut val = self.c[k] - z[zeta];
            grad.push((zeta, -1.0));
            for j in k..self.m {
                if let Some(i) = self.x_var[j] {
                    val += self.a[j] * z[i];
                    grad.push((i, self.a[j]));
                }
            }
            if self.coop {
                val += self.a_c * z[self.xc()];
                grad.push((self.xc(), self.a_c));
            }
            visit(val, &grad, None);
        }
    }

    /// Barrier objective `τ ζ - Σ log(-f)`, or `None` outside the domain.
    fn phi(&self, z: &[f64], tau: f64) -> Option<f64> {
        let mut acc = tau * z[self.zeta()];
        let mut ok = true;
        self.for_each(z, |f, _, _| {
            if f < 0.0 && ok {
                acc -= (-f).ln();
            } else {
                ok = false;
            }
        });
        ok.then_some(acc)
    }

    fn derivatives(&self, z: &[f64], tau: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        g[self.zeta()] = tau;
        self.for_each(z, |f, grad, hd| {
            let inv = -1.0 / f;
            for &(i, gi) in grad {
                g[i] += inv * gi;
                for &(j, gj) in grad {
                    h[(i, j)] += inv * inv * gi * gj;
                }
            }
            if let Some((i, d)) = hd {
                h[(i, i)] += inv * d;
            }
        });
        (g, h)
    }

    /// `max_k` of the epigraph terms, i.e. `T / T_ref` at `z`.
    fn epigraph_max(&self, z: &[f64]) -> f64 {
        (0..self.m)
            .map(|k| {
                let mut v = self.c[k];
                for j in k..self.m {
                    if let Some(i) = self.x_var[j] {
                        v += self.a[j] * z[i];
                    }
                }
                if self.coop {
                    v += self.a_c * z[self.xc()];
                }
                v
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solves the subproblem for any non-negative ratios (they need not sum to
/// one); used directly for lower bounds at polyblock vertices.
pub(crate) fn solve_inner_raw(inst: &ProblemInstance, omega: &[f64], opts: &InnerOptions) -> Result<InnerSolution> {
    let m = inst.num_uavs();
    if omega.len() != m + 1 {
        return Err(Error::DimensionMismatch {
            what: "omega",
            got: omega.len(),
            expected: m + 1,
        });
    }
    if omega.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidAllocation(format!(
            "ratios must be non-negative, got {omega:?}"
        )));
    }
    let c = inst.c_bits();
    let e_bar = inst.energy_budget();
    let p_max = inst.p_max();
    let beta = inst.beta_s();
    let gamma = inst.gamma();
    let t_min: Vec<f64> = (0..m).map(|i| inst.t_n_min(i)).collect();
    let t_min_c = inst.t_c_min();
    let w0 = omega[0];
    let coop = w0 >= ACTIVE_OMEGA;

    let full = |p_c: f64| TransmissionPlan {
        t_n: t_min.clone(),
        t_c: t_min_c,
        p_n: vec![p_max; m],
        p_c: vec![p_c; m],
        e_c: vec![w0 * c * t_min_c * p_c; m],
    };
    let max_power = full(if w0 > 0.0 { p_max } else { 0.0 });
    let t_ref = timeline_raw(inst, omega, &max_power).total_t;
    if t_ref <= 0.0 {
        // Nothing to sense or send.
        return Ok(InnerSolution {
            plan: max_power,
            objective_t: 0.0,
            kkt_residual: 0.0,
            converged: true,
            newton_steps: 0,
        });
    }

    let mut x_var = vec![None; m];
    let mut n = 0;
    for i in 0..m {
        if omega[i + 1] >= ACTIVE_OMEGA {
            x_var[i] = Some(n);
            n += 1;
        }
    }
    if coop {
        n += 1 + m;
    }
    n += 1;

    let ind: Vec<Scaled> = (0..m).map(|i| Scaled::new(p_max * gamma[i])).collect();
    let kappa: Vec<f64> = (0..m).map(|i| omega[i + 1] * c * t_min[i] * p_max / e_bar).collect();
    let co = Scaled::new(p_max * inst.gamma_sum());
    let kappa0 = w0 * c * t_min_c * p_max / e_bar;
    let w: Vec<f64> = gamma.iter().map(|g| g / inst.gamma_sum()).collect();

    // Feasibility against the Shannon floors.
    let slack: Vec<f64> = (0..m)
        .map(|i| {
            if x_var[i].is_some() {
                1.0 - kappa[i] * ind[i].floor()
            } else {
                1.0
            }
        })
        .collect();
    for i in 0..m {
        if slack[i] <= 0.0 {
            return Err(Error::Infeasible(format!(
                "UAV {i} needs at least {:.6e} J for its own data, budget is {e_bar} J",
                omega[i + 1] * c * std::f64::consts::LN_2 / (inst.bandwidth() * gamma[i])
            )));
        }
    }
    let weighted_slack: f64 = w.iter().zip(&slack).map(|(w, s)| w * s).sum();
    let rho = if coop {
        kappa0 * co.floor() / weighted_slack
    } else {
        0.0
    };
    if rho >= 1.0 {
        return Err(Error::Infeasible(format!(
            "cooperative upload of ratio {w0} exceeds the energy left after independent uploads"
        )));
    }

    let mut a = vec![0.0; m];
    let mut cst = vec![0.0; m];
    for k in 0..m {
        let mut v = (omega[k + 1] + w0) * beta;
        for j in k..m {
            if x_var[j].is_none() {
                v += omega[j + 1] * c * t_min[j];
            }
        }
        if !coop {
            v += w0 * c * t_min_c;
        }
        cst[k] = v / t_ref;
    }
    for j in 0..m {
        a[j] = omega[j + 1] * c * t_min[j] / t_ref;
    }
    let a_c = if coop { w0 * c * t_min_c / t_ref } else { 0.0 };
    for (k, ck) in cst.iter_mut().enumerate() {
        // Offset form: value at u = 0 is the max-power term, minus ζ = 1.
        let tail: f64 = (k..m).filter(|&j| x_var[j].is_some()).map(|j| a[j]).sum();
        *ck += tail - 1.0 + a_c;
    }
    let prob = Barrier {
        m,
        x_var: x_var.clone(),
        coop,
        n,
        kappa: kappa.clone(),
        ind: ind.clone(),
        kappa0,
        co,
        w: w.clone(),
        a,
        a_c,
        c: cst,
        t_ref,
    };

    // Strictly feasible start.
    let r = if coop { ((1.0 + rho) / 2.0).sqrt() } else { 0.5 };
    let mut z = vec![0.0; n];
    let mut leftover = vec![1.0; m];
    for i in 0..m {
        if let Some(v) = x_var[i] {
            let level = (1.0 - r * slack[i]) / kappa[i];
            let x = ind[i].solve(level).max(1.0 + 1e-3);
            let x = if kappa[i] * ind[i].g(x) < 1.0 - r * slack[i] {
                x
            } else {
                ind[i].solve(level) * (1.0 + 1e-9)
            };
            z[v] = x - 1.0;
            leftover[i] = 1.0 - kappa[i] * ind[i].g(x);
        }
    }
    if coop {
        let mut xc = 1.5;
        loop {
            let mut sum = 0.0;
            for i in 0..m {
                let e = (r * leftover[i] / kappa0).min(0.99 * xc);
                z[prob.e(i)] = e;
                sum += w[i] * e;
            }
            if co.g(xc) < sum {
                break;
            }
            xc *= 2.0;
            if !xc.is_finite() {
                return Err(Error::Infeasible("no strictly feasible cooperative start".into()));
            }
        }
        z[prob.xc()] = xc - 1.0;
    }
    let epi = prob.epigraph_max(&z);
    z[prob.zeta()] = epi + 0.1 * epi.abs() + 1e-6;

    let (z, gap, steps, converged) = barrier_solve(&prob, z, opts);
    Ok(finish(inst, omega, &prob, &z, gap, steps, converged))
}

fn barrier_solve(prob: &Barrier, mut z: Vec<f64>, opts: &InnerOptions) -> (Vec<f64>, f64, usize, bool) {
    let mc = prob.num_constraints() as f64;
    let mut tau = mc.max(1.0);
    let mut steps = 0;
    loop {
        // Centering.
        let mut stalled = false;
        loop {
            if steps >= opts.max_newton_steps {
                let gap = mc / tau;
                return (z, gap, steps, false);
            }
            let (g, h) = prob.derivatives(&z, tau);
            let dz = match newton_direction(&g, h) {
                Some(d) => d,
                None => {
                    stalled = true;
                    break;
                }
            };
            let decrement = -g.dot(&dz);
            steps += 1;
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let phi0 = prob.phi(&z, tau).expect("iterate stays strictly feasible");
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-20 {
                let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, b)| a + s * b).collect();
                if trial == z {
                    break;
                }
                if let Some(p) = prob.phi(&trial, tau) {
                    if p <= phi0 - 0.25 * s * decrement {
                        z = trial;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !accepted {
                stalled = true;
                break;
            }
        }
        let gap = mc / tau;
        let t = (1.0 + z[prob.zeta()]) * prob.t_ref;
        if gap * prob.t_ref <= opts.tol * (1.0 + t) {
            return (z, gap, steps, true);
        }
        if stalled {
            // Numerical floor reached; accept when close.
            let ok = gap * prob.t_ref <= 1e3 * opts.tol * (1.0 + t);
            return (z, gap, steps, ok);
        }
        tau *= opts.mu;
    }
}

fn newton_direction(g: &DVector<f64>, mut h: DMatrix<f64>) -> Option<DVector<f64>> {
    let n = g.len();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for attempt in 0..4 {
        if let Some(ch) = h.clone().cholesky() {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        let reg = scale * 1e-14 * 100f64.powi(attempt);
        for i in 0..n {
            h[(i, i)] += reg;
        }
    }
    None
}

fn finish(
    inst: &ProblemInstance,
    omega: &[f64],
    prob: &Barrier,
    z: &[f64],
    gap: f64,
    steps: usize,
    converged: bool,
) -> InnerSolution {
    let m = inst.num_uavs();
    let c = inst.c_bits();
    let b = inst.bandwidth();
    let p_max = inst.p_max();
    let gamma = inst.gamma();
    let w0 = omega[0];
    let mut t_n = vec![0.0; m];
    let mut p_n = vec![p_max; m];
    for i in 0..m {
        t_n[i] = inst.t_n_min(i);
        if let Some(v) = prob.x_var[i] {
            let x = 1.0 + z[v].max(0.0);
            t_n[i] *= x;
            p_n[i] = if x == 1.0 {
                p_max
            } else {
                (snr_for_time(t_n[i], b) / gamma[i]).min(p_max)
            };
        }
    }
    let t_min_c = inst.t_c_min();
    let (t_c, p_c) = if prob.coop {
        let xc = 1.0 + z[prob.xc()].max(0.0);
        let mut t_c = t_min_c * xc;
        let mut p_c: Vec<f64> = (0..m)
            .map(|i| (z[prob.e(i)].max(0.0) * p_max / xc).min(p_max))
            .collect();
        let needed = if xc == 1.0 {
            p_max * inst.gamma_sum()
        } else {
            snr_for_time(t_c, b)
        };
        let have: f64 = p_c.iter().zip(gamma).map(|(p, g)| p * g).sum();
        if have >= needed {
            // Trim the surplus so the cooperative rate equation holds exactly.
            let f = needed / have;
            p_c.iter_mut().for_each(|p| *p *= f);
        } else {
            t_c = time_per_bit(have, b);
        }
        (t_c, p_c)
    } else if w0 > 0.0 {
        (t_min_c, vec![p_max; m])
    } else {
        (t_min_c, vec![0.0; m])
    };
    let e_c: Vec<f64> = p_c.iter().map(|p| w0 * c * t_c * p).collect();
    let mut plan = TransmissionPlan {
        t_n,
        t_c,
        p_n,
        p_c,
        e_c,
    };

    fill_idle_gaps(inst, omega, &mut plan);
    let total = timeline_raw(inst, omega, &plan).total_t;
    InnerSolution {
        plan,
        objective_t: total,
        kkt_residual: gap * prob.t_ref / (1.0 + total),
        converged,
        newton_steps: steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{energy_consumption, evaluate_timeline, validate_solution};

    fn defaults() -> ProblemInstance {
        ProblemInstance::paper_default()
    }

    #[test]
    fn uniform_individual_at_defaults() {
        let inst = defaults();
        let alloc = TaskAllocation::uniform_individual(3);
        let sol = solve_inner(&inst, &alloc).unwrap();
        assert!((sol.objective_t - 29.756).abs() < 2e-3, "{}", sol.objective_t);
        for i in 0..3 {
            assert!((sol.plan.p_n[i] - 0.01).abs() < 1e-6 * 0.01, "{:?}", sol.plan.p_n);
            assert_eq!(sol.plan.e_c[i], 0.0);
        }
        assert!(validate_solution(&inst, &alloc, &sol.plan).is_empty());
        assert!(sol.converged && sol.kkt_residual <= 1e-6);
    }

    #[test]
    fn full_common_at_defaults() {
        let inst = defaults();
        let alloc = TaskAllocation::full_common(3);
        let sol = solve_inner(&inst, &alloc).unwrap();
        let oracle = 2.0 + 2e7 / (1e5 * 361f64.log2());
        assert!((sol.objective_t - oracle).abs() / oracle < 1e-6, "{}", sol.objective_t);
        assert!((sol.objective_t - 25.54).abs() < 0.01);
        for p in &sol.plan.p_c {
            assert!((p - 0.01).abs() < 1e-6 * 0.01);
        }
        assert!(
            validate_solution(&inst, &alloc, &sol.plan).is_empty(),
            "{:?}",
            validate_solution(&inst, &alloc, &sol.plan)
        );
    }

    #[test]
    fn single_carrier() {
        let inst = defaults().with_energy_budget(0.05).unwrap();
        let alloc = TaskAllocation::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let sol = solve_inner(&inst, &alloc).unwrap();
        let tau = crate::analysis::tau_from_energy(1.0, 1.5e4, 0.05, &inst).unwrap();
        let oracle = 2.0 + 2e7 * tau;
        assert!(
            (sol.objective_t - oracle).abs() / oracle < 1e-6,
            "{} vs {oracle}",
            sol.objective_t
        );
        assert!(validate_solution(&inst, &alloc, &sol.plan).is_empty());
    }

    #[test]
    fn tight_budget_binds_energy() {
        let inst = defaults().with_energy_budget(0.05).unwrap();
        let alloc = TaskAllocation::uniform_with_common(3);
        let sol = solve_inner(&inst, &alloc).unwrap();
        assert!(
            validate_solution(&inst, &alloc, &sol.plan).is_empty(),
            "{:?}",
            validate_solution(&inst, &alloc, &sol.plan)
        );
        let tl = evaluate_timeline(&inst, &alloc, &sol.plan).unwrap();
        assert!((tl.total_t - sol.objective_t).abs() <= 1e-9 * sol.objective_t);
        let e_max = (0..3)
            .map(|i| energy_consumption(&inst, &alloc, &sol.plan, i).unwrap())
            .fold(0.0, f64::max);
        assert!(e_max > 0.05 * (1.0 - 1e-4), "budget should bind: {e_max}");
    }

    #[test]
    fn infeasible_budget_detected() {
        let inst = defaults().with_energy_budget(0.004).unwrap();
        let err = solve_inner(&inst, &TaskAllocation::uniform_individual(3)).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err:?}");
        // Full cooperation is feasible just above the cooperative floor 3.85e-3 J.
        assert!(solve_inner(&inst, &TaskAllocation::full_common(3)).is_ok());
        let inst = defaults().with_energy_budget(0.0038).unwrap();
        assert!(matches!(
            solve_inner(&inst, &TaskAllocation::full_common(3)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn recover_power_examples() {
        let inst = defaults();
        let alloc = TaskAllocation::full_common(3);
        let t_c = 1.177e-6;
        let p = recover_coop_power(&[0.2354, 0.0, 1.0 * 2e7 * t_c * 0.01], t_c, &alloc, &inst).unwrap();
        assert!((p[0] - 0.01).abs() < 1e-5);
        assert_eq!(p[1], 0.0);
        assert!((p[2] - 0.01).abs() < 1e-15);
        let no_coop = TaskAllocation::uniform_individual(3);
        assert!(recover_coop_power(&[0.0; 3], t_c, &no_coop, &inst).is_err());
        assert!(recover_coop_power(&[0.0; 3], 0.0, &alloc, &inst).is_err());
    }

    #[test]
    fn raw_vertex_zero() {
        let inst = defaults();
        let sol = solve_inner_raw(&inst, &[0.0; 4], &InnerOptions::default()).unwrap();
        assert_eq!(sol.objective_t, 0.0);
    }

    #[test]
    fn scaled_kernel_derivatives() {
        let s = Scaled::new(90.0);
        assert!((s.g(1.0) - 1.0).abs() < 1e-14);
        for &x in &[1.0, 1.7, 5.0, 40.0] {
            let h = 1e-6 * x;
            let fd = (s.g(x + h) - s.g(x - h)) / (2.0 * h);
            assert!(((fd - s.d1(x)) / s.d1(x)).abs() < 1e-6);
            let fd2 = (s.d1(x + h) - s.d1(x - h)) / (2.0 * h);
            assert!(((fd2 - s.d2(x)) / s.d2(x)).abs() < 1e-5);
        }
        let x = s.solve(0.5);
        assert!((s.g(x) - 0.5).abs() < 1e-12 && s.g(x) <= 0.5);
    }
}
