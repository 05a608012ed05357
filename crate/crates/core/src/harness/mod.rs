//! Experiment plumbing: automatic routing between the solvers, brute-force
//! oracles, configuration and parameter sweeps.

mod config;
mod sweep;

pub use config::{Config, PRESET_PAPER_DEFAULT};
pub use sweep::{
    run_sweep, summarize, write_csv, write_csv_atomic, ResultRow, SweepOutcome, SweepParam, SweepSpec, SweepSummary,
};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{necessity_check, optimality_diagnostics};
use crate::baselines::Baseline;
use crate::degenerate::{independent_plan, solve_degenerate};
use crate::error::{Error, Result};
use crate::inner::solve_inner;
use crate::model::{timeline_raw, ProblemInstance, SolveReport, TaskAllocation};
use crate::polyblock::{solve_polyblock_with, PolyblockOptions};

/// Which solver [`solve_auto`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Overlap cannot help: allocation without a common task.
    Degenerate,
    Polyblock,
}

/// Route chosen by the overlap necessity test. Without sensing cost the
/// chain solver is undefined, so such instances always take the polyblock
/// path.
pub fn route_for(inst: &ProblemInstance) -> Route {
    if inst.beta_s() > 0.0 && !necessity_check(inst).overlap_possible {
        Route::Degenerate
    } else {
        Route::Polyblock
    }
}

/// Proposed scheme: routes by the necessity test and attaches the
/// optimality diagnostics.
pub fn solve_auto(inst: &ProblemInstance, epsilon: f64) -> Result<SolveReport> {
    let mut report = match route_for(inst) {
        Route::Degenerate => solve_degenerate(inst)?,
        Route::Polyblock => {
            let opts = PolyblockOptions {
                epsilon,
                ..Default::default()
            };
            solve_polyblock_with(inst, &opts)?.0
        }
    };
    report.scheme = Scheme::Proposed.to_string();
    let extra = optimality_diagnostics(inst, &report);
    report.diagnostics.extend(extra);
    Ok(report)
}

/// The proposed scheme or one of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    Proposed,
    Baseline(Baseline),
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::Baseline(Baseline::UtaWc),
        Scheme::Baseline(Baseline::UtaC),
        Scheme::Baseline(Baseline::FullC),
        Scheme::Baseline(Baseline::OptWc),
    ];

    pub fn solve(self, inst: &ProblemInstance, epsilon: f64) -> Result<SolveReport> {
        match self {
            Scheme::Proposed => solve_auto(inst, epsilon),
            Scheme::Baseline(b) => b.solve(inst),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Proposed => f.write_str("proposed"),
            Scheme::Baseline(b) => f.write_str(b.name()),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("proposed") {
            Ok(Scheme::Proposed)
        } else {
            s.parse().map(Scheme::Baseline)
        }
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> Self {
        s.to_string()
    }
}

/// Best grid point found by an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub omega: Vec<f64>,
    pub total_t: f64,
    pub points: usize,
}

/// Largest grid an oracle will enumerate.
pub const ORACLE_MAX_POINTS: usize = 1_000_000;

/// Ordered compositions `k_0 + … + k_M = n` with `k_1 <= … <= k_M`.
fn ordered_compositions(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, slots: usize, floor: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            if rest >= floor {
                cur.push(rest);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        // Remaining `slots` values are all at least `k`.
        let mut k = floor;
        while k * slots <= rest {
            cur.push(k);
            rec(rest - k, slots - 1, k, cur, out);
            cur.pop();
            k += 1;
        }
    }
    let mut out = Vec::new();
    for k0 in 0..=n {
        let mut cur = vec![k0];
        rec(n - k0, m, 0, &mut cur, &mut out);
    }
    out
}

/// Exhaustive search over the ordered simplex grid of step `δ`, solving
/// the inner problem at every point. Deterministic: ties go to the first
/// grid point in enumeration order.
pub fn brute_force_oracle(inst: &ProblemInstance, grid_step: f64) -> Result<OracleResult> {
    let m = inst.num_uavs();
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::Config(format!(
            "grid step must lie in (0, 0.5], got {grid_step}"
        )));
    }
    let n = (1.0 / grid_step).round() as usize;
    if ((n as f64) * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("grid step {grid_step} does not divide one")));
    }
    // Unordered count C(n + M, M) bounds the ordered one.
    let mut count = 1f64;
    for i in 1..=m {
        count *= (n + i) as f64 / i as f64;
    }
    if count > 10.0 * ORACLE_MAX_POINTS as f64 {
        return Err(Error::Config(format!("grid of about {count:.3e} points is too large")));
    }
    let grid = ordered_compositions(m, n);
    if grid.len() > ORACLE_MAX_POINTS {
        return Err(Error::Config(format!("grid of {} points is too large", grid.len())));
    }
    let best = grid
        .par_iter()
        .enumerate()
        .filter_map(|(i, k)| {
            let omega: Vec<f64> = k.iter().map(|&k| k as f64 / n as f64).collect();
            let alloc = TaskAllocation::new(omega).ok()?;
            let sol = solve_inner(inst, &alloc).ok()?;
            Some((sol.objective_t, i, alloc))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match best {
        Some((t, _, alloc)) => Ok(OracleResult {
            omega: alloc.omega().to_vec(),
            total_t: t,
            points: grid.len(),
        }),
        None => Err(Error::Infeasible("no grid point meets the energy budget".into())),
    }
}

/// Dense scan over `ω_1` for two UAVs without a common task, using the
/// closed-form per-bit times.
pub fn degenerate_scan_oracle(inst: &ProblemInstance, step: f64) -> Result<OracleResult> {
    if inst.num_uavs() != 2 {
        return Err(Error::DimensionMismatch {
            what: "UAVs for the ratio scan",
            got: inst.num_uavs(),
            expected: 2,
        });
    }
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Config(format!("scan step must lie in (0, 0.5], got {step}")));
    }
    let n = (0.5 / step).floor() as usize;
    let best = (0..=n)
        .into_par_iter()
        .filter_map(|i| {
            let w1 = i as f64 * step;
            let omega = [0.0, w1, 1.0 - w1];
            let plan = independent_plan(inst, &omega).ok()?;
            Some((timeline_raw(inst, &omega, &plan).total_t, i, omega))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match best {
        Some((t, _, omega)) => Ok(OracleResult {
            omega: omega.to_vec(),
            total_t: t,
            points: n + 1,
        }),
        None => Err(Error::Infeasible("no scanned ratio meets the energy budget".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_are_ordered_and_complete() {
        let g = ordered_compositions(1, 2);
        assert_eq!(g, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let g = ordered_compositions(2, 4);
        for k in &g {
            assert_eq!(k.iter().sum::<usize>(), 4);
            assert!(k[1] <= k[2]);
        }
        // k0 = 0: (0,4),(1,3),(2,2); 1: (0,3),(1,2); 2: (0,2),(1,1); 3: (0,1); 4: (0,0)
        assert_eq!(g.len(), 9);
    }

    #[test]
    fn single_uav_grid() {
        let inst = ProblemInstance::new(vec![9e3], 2e7, 2.0, 1e5, 0.01, 1.0).unwrap();
        let r = brute_force_oracle(&inst, 0.5).unwrap();
        assert_eq!(r.points, 3);
        let best = [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]
            .iter()
            .map(|w| {
                solve_inner(&inst, &TaskAllocation::new(w.to_vec()).unwrap())
                    .unwrap()
                    .objective_t
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.total_t, best);
    }

    #[test]
    fn refinement_never_worse() {
        let inst = ProblemInstance::new(vec![1e4, 1e4], 1e7, 1.0, 1e5, 0.01, 1.0).unwrap();
        let coarse = brute_force_oracle(&inst, 0.1).unwrap();
        let fine = brute_force_oracle(&inst, 0.05).unwrap();
        assert!(fine.total_t <= coarse.total_t);
    }

    #[test]
    fn oversized_grid_rejected() {
        let inst = ProblemInstance::new(vec![1e4; 6], 1e7, 1.0, 1e5, 0.01, 1.0).unwrap();
        assert!(brute_force_oracle(&inst, 0.005).is_err());
        assert!(brute_force_oracle(&inst, 0.3).is_err());
    }

    #[test]
    fn routing_examples() {
        let d = ProblemInstance::paper_default();
        assert_eq!(route_for(&d), Route::Polyblock);
        let low = d.with_energy_budget(0.01).unwrap();
        assert_eq!(route_for(&low), Route::Degenerate);
        let r = solve_auto(&low, 1e-3).unwrap();
        assert_eq!(r.allocation.common(), 0.0);
        let r = solve_auto(&d.with_beta_s(0.01).unwrap(), 1e-3).unwrap();
        assert!(r.allocation.common() >= 0.99);
    }

    #[test]
    fn scheme_names() {
        for s in Scheme::ALL {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        let json = serde_json::to_string(&Scheme::Baseline(Baseline::FullC)).unwrap();
        assert_eq!(json, "\"full_c\"");
    }
}
