//! Convex relaxation used to bound polyblock boxes from below.
//!
//! Written in upload durations rather than per-bit times, the problem is
//! jointly convex in the ratios: UAV `j` uploading `C z_j` bits in `U_j`
//! seconds needs `γ_j`-weighted energy `h(z_j, U_j) = U_j (2^{C z_j/(B U_j)} − 1)`,
//! the perspective of a convex function. The relaxation keeps
//!
//! * the completion-time chain, linear in `(z, U, U_c)`;
//! * the power caps `U >= C t_min z`, and per-UAV cooperative energy
//!   `E^c_j <= p_max U_c`;
//! * per-UAV energy `h(z_j, U_j)/γ_j + E^c_j <= Ē`;
//! * cooperative rate `h(z_0, U_c) <= Σ_j γ_j E^c_j`;
//! * the ratio ordering and the box.
//!
//! Every `h` constraint is replaced by supporting planes. Because `h` is
//! positively homogeneous these all pass through the origin and are indexed
//! by the spectral efficiency `x = C z/(B U)` alone. The planes only
//! loosen the constraints, so every linear program solved along the way
//! gives a valid bound. The cut set is refined where the LP solution
//! violates the true constraint.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Solution, Variable};

use crate::model::ProblemInstance;

/// Initial supporting planes per constraint.
const GRID: usize = 24;
/// Cut-refinement rounds.
const ROUNDS: usize = 40;

/// Coefficients `(a, b)` of the supporting plane `a z + b U <= h(z, U)`
/// touching at spectral efficiency `x`.
fn plane(x: f64, c_over_b: f64) -> (f64, f64) {
    let p = x.exp2();
    let d = std::f64::consts::LN_2 * p;
    (c_over_b * d, (p - 1.0) - x * d)
}

fn h(z: f64, u: f64, c_over_b: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if u <= 0.0 {
        return f64::INFINITY;
    }
    u * (c_over_b * z / u * std::f64::consts::LN_2).exp_m1()
}

/// Result of bounding one box.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BoxBound {
    pub value: f64,
    /// Minimizer of the relaxation, a ratio vector on `Σz = 1`; absent
    /// when the LP failed numerically and only the corner value is known.
    pub point: Option<Vec<f64>>,
}

pub(crate) struct Relaxation {
    m: usize,
    beta: f64,
    c_bits: f64,
    c_over_b: f64,
    gamma: Vec<f64>,
    gamma_sum: f64,
    p_max: f64,
    e_bar: f64,
    t_min: Vec<f64>,
    t_min_c: f64,
    x_max: Vec<f64>,
    x_max_c: f64,
}

struct Vars {
    z: Vec<Variable>,
    u: Vec<Variable>,
    uc: Variable,
    e: Vec<Variable>,
}

impl Relaxation {
    pub(crate) fn new(inst: &ProblemInstance) -> Self {
        let m = inst.num_uavs();
        let gamma = inst.gamma().to_vec();
        let p_max = inst.p_max();
        Self {
            m,
            beta: inst.beta_s(),
            c_bits: inst.c_bits(),
            c_over_b: inst.c_bits() / inst.bandwidth(),
            x_max: gamma
                .iter()
                .map(|g| (p_max * g).ln_1p() / std::f64::consts::LN_2)
                .collect(),
            x_max_c: (p_max * inst.gamma_sum()).ln_1p() / std::f64::consts::LN_2,
            gamma_sum: inst.gamma_sum(),
            t_min: (0..m).map(|i| inst.t_n_min(i)).collect(),
            t_min_c: inst.t_c_min(),
            gamma,
            p_max,
            e_bar: inst.energy_budget(),
        }
    }

    /// Own-energy cut of UAV `j` at efficiency `x`, in units of `Ē`.
    fn own_cut(&self, vars: &Vars, j: usize, x: f64) -> LinearExpr {
        let (a, b) = plane(x, self.c_over_b);
        let s = 1.0 / (self.gamma[j] * self.e_bar);
        let mut e = LinearExpr::empty();
        e.add(vars.z[j + 1], a * s);
        e.add(vars.u[j], b * s);
        e.add(vars.e[j], 1.0);
        e
    }

    /// Cooperative-rate cut at efficiency `x`, in units of `Ē Σγ`.
    fn coop_cut(&self, vars: &Vars, x: f64) -> LinearExpr {
        let (a, b) = plane(x, self.c_over_b);
        let s = 1.0 / (self.gamma_sum * self.e_bar);
        let mut e = LinearExpr::empty();
        e.add(vars.z[0], a * s);
        e.add(vars.uc, b * s);
        for j in 0..self.m {
            e.add(vars.e[j], -self.gamma[j] / self.gamma_sum);
        }
        e
    }

    /// Lower bound of the optimal completion time over sorted allocations
    /// in `[lower, upper]` with `Σz = 1`, strengthened by the optimal time
    /// `t_lower` at the corner `lower`. `None` when no such allocation
    /// exists.
    pub(crate) fn box_bound(&self, lower: &[f64], upper: &[f64], t_lower: f64) -> Option<BoxBound> {
        let m = self.m;
        if lower.iter().sum::<f64>() > 1.0 || upper.iter().sum::<f64>() < 1.0 {
            return None;
        }
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let vars = Vars {
            z: (0..=m).map(|i| lp.add_var(0.0, (lower[i], upper[i]))).collect(),
            u: (0..m).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect(),
            uc: lp.add_var(0.0, (0.0, f64::INFINITY)),
            e: (0..m).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect(),
        };
        let delta = lp.add_var(1.0, (0.0, f64::INFINITY));

        let mut sum = LinearExpr::empty();
        for &v in &vars.z {
            sum.add(v, 1.0);
        }
        lp.add_constraint(sum, ComparisonOp::Eq, 1.0);
        for j in 1..m {
            lp.add_constraint([(vars.z[j], 1.0), (vars.z[j + 1], -1.0)], ComparisonOp::Le, 0.0);
        }
        for k in 0..m {
            let mut e = LinearExpr::empty();
            e.add(delta, 1.0);
            e.add(vars.z[k + 1], -self.beta);
            e.add(vars.z[0], -self.beta);
            for &u in &vars.u[k..] {
                e.add(u, -1.0);
            }
            e.add(vars.uc, -1.0);
            lp.add_constraint(e, ComparisonOp::Ge, 0.0);
        }
        for j in 0..m {
            lp.add_constraint(
                [(vars.u[j], 1.0), (vars.z[j + 1], -self.c_bits * self.t_min[j])],
                ComparisonOp::Ge,
                0.0,
            );
            lp.add_constraint([(vars.e[j], self.e_bar), (vars.uc, -self.p_max)], ComparisonOp::Le, 0.0);
        }
        lp.add_constraint(
            [(vars.uc, 1.0), (vars.z[0], -self.c_bits * self.t_min_c)],
            ComparisonOp::Ge,
            0.0,
        );
        // Moving away from the corner delays everything after it: at least
        // β + C t^c_min per unit of common ratio, C t_min per unit of the
        // last UAV's ratio.
        let coop_rate = self.beta + self.c_bits * self.t_min_c;
        let last_rate = self.c_bits * self.t_min[m - 1];
        lp.add_constraint(
            [(delta, 1.0), (vars.z[0], -coop_rate), (vars.z[m], -last_rate)],
            ComparisonOp::Ge,
            t_lower - coop_rate * lower[0] - last_rate * lower[m],
        );
        for i in 1..=GRID {
            let f = i as f64 / GRID as f64;
            for j in 0..m {
                lp.add_constraint(self.own_cut(&vars, j, self.x_max[j] * f), ComparisonOp::Le, 1.0);
            }
            lp.add_constraint(self.coop_cut(&vars, self.x_max_c * f), ComparisonOp::Le, 0.0);
        }

        // Only a proven-infeasible LP may discard the box; any other
        // solver failure falls back to the corner value.
        let corner_only = Some(BoxBound {
            value: t_lower,
            point: None,
        });
        let mut sol = match lp.solve() {
            Ok(s) => s,
            Err(microlp::Error::Infeasible) => return None,
            Err(_) => return corner_only,
        };
        for _ in 0..ROUNDS {
            let cuts = self.violated(&vars, &sol);
            if cuts.is_empty() {
                break;
            }
            for (expr, rhs) in cuts {
                let last = sol.objective();
                sol = match sol.add_constraint(expr, ComparisonOp::Le, rhs) {
                    Ok(s) => s,
                    Err(microlp::Error::Infeasible) => return None,
                    Err(_) => {
                        return Some(BoxBound {
                            value: last.max(t_lower) - 1e-9 * (1.0 + last.abs()),
                            point: None,
                        })
                    }
                };
            }
        }
        let value = sol.objective();
        let point = Some(vars.z.iter().map(|&v| sol[v].max(0.0)).collect());
        Some(BoxBound {
            // Absorb simplex round-off so the bound stays on the safe side.
            value: value - 1e-9 * (1.0 + value.abs()),
            point,
        })
    }

    /// Cuts at the current solution for every violated energy or rate
    /// constraint.
    fn violated(&self, vars: &Vars, sol: &Solution) -> Vec<(LinearExpr, f64)> {
        let mut out = Vec::new();
        let tol = 1e-10;
        for j in 0..self.m {
            let (z, u, e) = (sol[vars.z[j + 1]], sol[vars.u[j]], sol[vars.e[j]]);
            if z <= 0.0 || u <= 0.0 {
                continue;
            }
            let lhs = h(z, u, self.c_over_b) / (self.gamma[j] * self.e_bar) + e;
            if lhs > 1.0 + tol {
                let x = (self.c_over_b * z / u).min(self.x_max[j]);
                out.push((self.own_cut(vars, j, x), 1.0));
            }
        }
        let (z0, uc) = (sol[vars.z[0]], sol[vars.uc]);
        if z0 > 0.0 && uc > 0.0 {
            let supply: f64 = (0..self.m)
                .map(|j| self.gamma[j] / self.gamma_sum * sol[vars.e[j]])
                .sum();
            let lhs = h(z0, uc, self.c_over_b) / (self.gamma_sum * self.e_bar) - supply;
            if lhs > tol {
                let x = (self.c_over_b * z0 / uc).min(self.x_max_c);
                out.push((self.coop_cut(vars, x), 0.0));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::solve_inner;
    use crate::model::TaskAllocation;

    #[test]
    fn supporting_plane_touches_and_stays_below() {
        let cb = 200.0;
        for &x in &[0.1, 1.0, 3.0, 7.0] {
            let (a, b) = plane(x, cb);
            // Touching point: z/U = x/cb.
            let (z, u) = (x / cb, 1.0);
            assert!((a * z + b * u - h(z, u, cb)).abs() < 1e-9 * h(z, u, cb));
            for &(z, u) in &[(0.01, 1.0), (0.05, 2.0), (0.3, 5.0), (0.001, 0.01)] {
                assert!(a * z + b * u <= h(z, u, cb) * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn bound_never_exceeds_true_optimum_on_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(beta, e) in &[(2.0, 1.0), (5.0, 0.02), (0.5, 0.05), (9.0, 0.2), (3.0, 0.01)] {
            let inst = ProblemInstance::paper_default()
                .with_beta_s(beta)
                .unwrap()
                .with_energy_budget(e)
                .unwrap();
            let relax = Relaxation::new(&inst);
            let bound = relax.box_bound(&[0.0; 4], &[1.0; 4], 0.0).unwrap();
            assert!((bound.point.unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let mut tested = 0;
            for _ in 0..400 {
                let mut w: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                w[1..].sort_by(f64::total_cmp);
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
                let Ok(alloc) = TaskAllocation::new(w.clone()) else {
                    continue;
                };
                if let Ok(sol) = solve_inner(&inst, &alloc) {
                    tested += 1;
                    assert!(
                        bound.value <= sol.objective_t + 1e-9,
                        "beta={beta} e={e} {w:?}: {} > {}",
                        bound.value,
                        sol.objective_t
                    );
                }
            }
            assert!(tested > 0);
        }
    }

    #[test]
    fn fixed_allocation_bound_matches_inner_solver() {
        // Pinning the box to one allocation reduces the relaxation to the
        // inner problem, apart from the per-UAV cooperative power cap.
        for &(beta, e) in &[(2.0, 1.0), (2.0, 0.05), (5.0, 0.02)] {
            let inst = ProblemInstance::paper_default()
                .with_beta_s(beta)
                .unwrap()
                .with_energy_budget(e)
                .unwrap();
            let w = [0.25, 0.25, 0.25, 0.25];
            let t = solve_inner(&inst, &TaskAllocation::new(w.to_vec()).unwrap())
                .unwrap()
                .objective_t;
            let b = Relaxation::new(&inst).box_bound(&w, &w, 0.0).unwrap().value;
            assert!(b <= t + 1e-9);
            assert!(b >= t * (1.0 - 1e-3), "beta={beta} e={e}: {b} vs {t}");
        }
    }

    #[test]
    fn empty_box_has_no_bound() {
        let relax = Relaxation::new(&ProblemInstance::paper_default());
        assert!(relax.box_bound(&[0.5, 0.3, 0.3, 0.0], &[1.0; 4], 0.0).is_none());
        assert!(relax.box_bound(&[0.0; 4], &[0.2; 4], 0.0).is_none());
    }
}
