//! Overlapped-sensing allocation by polyblock outer approximation.
//!
//! The inner optimum `T(ω)` is increasing in every ratio, and the feasible
//! allocations are the points of the box `[0, ω̄]` with `Σω >= 1`, a
//! conormal set whose boundary is the hyperplane `Σω = 1`. The generic
//! [`engine`] therefore applies with exact vertex bounds from the inner
//! solver and an analytic boundary projection.

pub mod engine;
mod relax;

use serde::{Deserialize, Serialize};

pub use engine::{
    children, minimize, project_to_boundary, replace_vertex, Bound, EngineOptions, EngineOutcome, Hyperrect,
    MonotoneProblem, PolyblockTrace, TraceRecord, Vertex, VertexSet,
};

use crate::degenerate::solve_degenerate;
use crate::error::{Error, Result};
use crate::inner::{solve_inner_raw, solve_inner_with, InnerOptions};
use crate::model::{evaluate_timeline, ProblemInstance, SolveReport, TaskAllocation};
use relax::Relaxation;

/// Slack allowed when deciding whether a point lies on `Σω = 1`.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolyblockOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub max_vertices: usize,
    /// Restrict the search to `ω_0 = 0`.
    pub pin_common_to_zero: bool,
    /// Start from the best allocation without a common task and from full
    /// cooperation instead of from an empty incumbent.
    pub seed_incumbents: bool,
    pub inner: InnerOptions,
}

impl Default for PolyblockOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_iterations: 500,
            max_vertices: 100_000,
            pin_common_to_zero: false,
            seed_incumbents: true,
            inner: InnerOptions::default(),
        }
    }
}

/// Upper corner of the search box. The common ratio may reach one; the
/// ordering `ω_1 <= … <= ω_M` with `Σω <= 1` caps `ω_m` at `1/(M+1−m)`.
pub fn upper_corner(num_uavs: usize, pin_common_to_zero: bool) -> Vec<f64> {
    let mut u = vec![if pin_common_to_zero { 0.0 } else { 1.0 }];
    u.extend((1..=num_uavs).map(|m| 1f64.min(1.0 / (num_uavs + 1 - m) as f64)));
    u
}

/// Point where the segment from `v` to `upper` crosses `Σω = 1`.
pub fn simplex_projection(v: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    let sv: f64 = v.iter().sum();
    let su: f64 = upper.iter().sum();
    if sv > 1.0 + BOUNDARY_TOL {
        return Err(Error::InvalidAllocation(format!(
            "vertex already beyond the simplex (sum {sv})"
        )));
    }
    if su < 1.0 {
        return Err(Error::InvalidAllocation(format!(
            "upper corner cannot reach the simplex (sum {su})"
        )));
    }
    if sv >= 1.0 {
        return Ok(v.to_vec());
    }
    let lambda = (1.0 - sv) / (su - sv);
    Ok(v.iter().zip(upper).map(|(a, b)| a + lambda * (b - a)).collect())
}

/// Puts a boundary point into allocation form: individual ratios sorted to
/// match the ascending gains (never worse) and the sum made exactly one.
pub fn repair(z: &[f64]) -> Result<TaskAllocation> {
    let mut omega: Vec<f64> = z.iter().map(|w| w.max(0.0)).collect();
    omega[1..].sort_by(f64::total_cmp);
    let s: f64 = omega.iter().sum();
    if !(s > 0.0) {
        return Err(Error::InvalidAllocation("all ratios are zero".into()));
    }
    for w in &mut omega {
        *w /= s;
    }
    let head: f64 = omega[..omega.len() - 1].iter().sum();
    let last = omega.len() - 1;
    omega[last] = (1.0 - head).max(0.0);
    TaskAllocation::new(omega)
}

struct AllocationProblem<'a> {
    inst: &'a ProblemInstance,
    upper: Vec<f64>,
    inner: InnerOptions,
    relax: Relaxation,
}

impl MonotoneProblem for AllocationProblem<'_> {
    fn upper_corner(&self) -> Vec<f64> {
        self.upper.clone()
    }

    fn lower_bound(&self, v: &[f64]) -> Option<Bound> {
        let sol = solve_inner_raw(self.inst, v, &self.inner).ok()?;
        let corner = sol.objective_t - sol.kkt_residual * (1.0 + sol.objective_t);
        let relaxed = self.relax.box_bound(v, &self.upper, corner)?;
        Some(Bound {
            value: relaxed.value.max(corner),
            candidate: relaxed.point,
        })
    }

    fn contains(&self, z: &[f64]) -> bool {
        z.iter().sum::<f64>() >= 1.0 - BOUNDARY_TOL
    }

    fn project(&self, v: &[f64], upper: &[f64]) -> Option<Vec<f64>> {
        simplex_projection(v, upper).ok()
    }

    fn evaluate(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let alloc = repair(z).ok()?;
        let sol = solve_inner_with(self.inst, &alloc, &self.inner).ok()?;
        Some((sol.objective_t, alloc.omega().to_vec()))
    }
}

/// Polyblock solve with default options.
pub fn solve_polyblock(inst: &ProblemInstance, epsilon: f64) -> Result<SolveReport> {
    let opts = PolyblockOptions {
        epsilon,
        ..Default::default()
    };
    solve_polyblock_with(inst, &opts).map(|(r, _)| r)
}

/// Polyblock solve returning the per-iteration trace as well.
pub fn solve_polyblock_with(inst: &ProblemInstance, opts: &PolyblockOptions) -> Result<(SolveReport, PolyblockTrace)> {
    if !(opts.epsilon > 0.0 && opts.epsilon <= 0.1) {
        return Err(Error::Config(format!(
            "epsilon must lie in (0, 0.1], got {}",
            opts.epsilon
        )));
    }
    let m = inst.num_uavs();
    let problem = AllocationProblem {
        inst,
        upper: upper_corner(m, opts.pin_common_to_zero),
        inner: opts.inner,
        relax: Relaxation::new(inst),
    };
    let mut seeds = Vec::new();
    if opts.seed_incumbents {
        // Among allocations with equal completion time the one with the
        // smaller common ratio is reported, so it is offered first.
        if let Ok(r) = solve_degenerate(inst) {
            seeds.push(r.allocation.omega().to_vec());
        }
        if !opts.pin_common_to_zero {
            seeds.push(TaskAllocation::full_common(m).omega().to_vec());
        }
    }
    let engine_opts = EngineOptions {
        epsilon: opts.epsilon,
        max_iterations: opts.max_iterations,
        max_vertices: opts.max_vertices,
        // Inner solves are accurate to ~1e-8 relative.
        improvement_tol: 1e-7,
    };
    let out = minimize(&problem, &engine_opts, &seeds);
    let Some(best) = out.best_point.clone() else {
        return Err(Error::Infeasible("no task allocation meets the energy budget".into()));
    };
    let alloc = TaskAllocation::new(best)?;
    let sol = solve_inner_with(inst, &alloc, &opts.inner)?;
    let timeline = evaluate_timeline(inst, &alloc, &sol.plan)?;
    let report = SolveReport {
        scheme: "proposed".into(),
        allocation: alloc,
        plan: sol.plan,
        timeline,
        iterations: out.iterations,
        bound_gap: out.gap(),
        diagnostics: Vec::new(),
    };
    if !out.converged {
        return Err(Error::NotConverged {
            iterations: out.iterations,
            gap: out.gap(),
            best: Box::new(report),
        });
    }
    Ok((report, out.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_solution;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn corner_formula() {
        assert_eq!(upper_corner(3, false), vec![1.0, 1.0 / 3.0, 0.5, 1.0]);
        assert_eq!(upper_corner(2, true), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn projection_examples() {
        let u = [1.0, 1.0 / 3.0, 0.5, 1.0];
        let p = simplex_projection(&[0.0; 4], &u).unwrap();
        let l = 6.0 / 17.0;
        assert!(close(&p, &[l, l / 3.0, l / 2.0, l], 1e-15));
        assert!(close(&p, &[0.35294, 0.11765, 0.17647, 0.35294], 1e-5));

        let v = [0.2, 0.3, 0.1, 0.4];
        assert_eq!(simplex_projection(&v, &u).unwrap(), v.to_vec());

        let p = simplex_projection(&[0.5, 0.0, 0.0, 0.0], &u).unwrap();
        let l: f64 = 0.5 / (17.0 / 6.0 - 0.5);
        assert!((l - 3.0 / 14.0).abs() < 1e-15);
        assert!(close(&p, &[0.5 + l * 0.5, 1.0 / 14.0, 3.0 / 28.0, 3.0 / 14.0], 1e-15));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(simplex_projection(&[0.6, 0.5, 0.0, 0.0], &u).is_err());
    }

    #[test]
    fn repair_sorts_individual_ratios() {
        let a = repair(&[0.1, 0.5, 0.2, 0.2]).unwrap();
        assert_eq!(a.omega(), &[0.1, 0.2, 0.2, 0.5]);
    }

    #[test]
    fn defaults_beat_baselines_and_validate() {
        let inst = ProblemInstance::paper_default();
        let (r, trace) = solve_polyblock_with(&inst, &PolyblockOptions::default()).unwrap();
        assert!(r.bound_gap <= 1e-3);
        assert!(r.total_t() <= 25.5409 * (1.0 + 1e-9));
        assert!(validate_solution(&inst, &r.allocation, &r.plan).is_empty());
        for w in trace.records.windows(2) {
            assert!(w[1].cbv <= w[0].cbv);
            assert!(w[1].lower_bound >= w[0].lower_bound);
        }
    }

    #[test]
    fn tiny_sensing_cost_prefers_full_overlap() {
        let inst = ProblemInstance::paper_default().with_beta_s(0.01).unwrap();
        let r = solve_polyblock(&inst, 1e-3).unwrap();
        assert!(r.allocation.common() >= 0.99, "{:?}", r.allocation);
        let expected = 2e7 * inst.t_c_min() + 0.01;
        assert!((r.total_t() - expected).abs() < 1e-6 * expected);
        assert!((expected - 23.55).abs() < 0.01);
    }

    #[test]
    fn unseeded_run_finds_synthetic_optimum() {
        let inst = ProblemInstance::new(vec![1e4, 1e4], 1e7, 1.0, 1e5, 0.01, 1.0).unwrap();
        let opts = PolyblockOptions {
            seed_incumbents: false,
            max_iterations: 5_000,
            ..Default::default()
        };
        let (r, _) = solve_polyblock_with(&inst, &opts).unwrap();
        // Dense grid over the simplex as an independent reference.
        let n = 200;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                let c = 1.0 - a - b;
                if b > c {
                    continue;
                }
                let alloc = TaskAllocation::new(vec![a, b, c.max(0.0)]).unwrap();
                if let Ok(s) = crate::inner::solve_inner(&inst, &alloc) {
                    best = best.min(s.objective_t);
                }
            }
        }
        assert!(r.total_t() <= best * (1.0 + 1e-9) + 1e-12, "{} vs {best}", r.total_t());
        assert!(r.total_t() >= best * (1.0 - 0.01));
    }

    #[test]
    fn pinned_matches_degenerate_without_seeding() {
        let inst = ProblemInstance::paper_default();
        let opts = PolyblockOptions {
            pin_common_to_zero: true,
            seed_incumbents: false,
            max_iterations: 20_000,
            ..Default::default()
        };
        let (r, _) = solve_polyblock_with(&inst, &opts).unwrap();
        let d = solve_degenerate(&inst).unwrap();
        assert_eq!(r.allocation.common(), 0.0);
        assert!(
            (r.total_t() - d.total_t()).abs() <= 0.01 * d.total_t(),
            "{} vs {}",
            r.total_t(),
            d.total_t()
        );
        assert!(d.total_t() <= r.total_t() * (1.0 + 1e-9));
    }

    #[test]
    fn bad_epsilon_rejected() {
        let inst = ProblemInstance::paper_default();
        assert!(matches!(solve_polyblock(&inst, 0.0), Err(Error::Config(_))));
        assert!(matches!(solve_polyblock(&inst, 0.5), Err(Error::Config(_))));
    }
}
