//! Comparison schemes: fixed allocations with optimal power and time
//! control, and the best allocation without a common task.

use serde::{Deserialize, Serialize};

use crate::degenerate::solve_degenerate;
use crate::error::{Error, Result};
use crate::inner::solve_inner;
use crate::model::{evaluate_timeline, ProblemInstance, SolveReport, TaskAllocation};

/// The four comparison schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Uniform individual tasks, no common task.
    UtaWc,
    /// Uniform split with the common task as one more share.
    UtaC,
    /// Everything sensed by every UAV and uploaded cooperatively.
    FullC,
    /// Optimal allocation without a common task.
    OptWc,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::UtaWc, Baseline::UtaC, Baseline::FullC, Baseline::OptWc];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::UtaWc => "uta_wc",
            Baseline::UtaC => "uta_c",
            Baseline::FullC => "full_c",
            Baseline::OptWc => "opt_wc",
        }
    }

    pub fn solve(self, inst: &ProblemInstance) -> Result<SolveReport> {
        match self {
            Baseline::UtaWc => uta_wc(inst),
            Baseline::UtaC => uta_c(inst),
            Baseline::FullC => full_c(inst),
            Baseline::OptWc => opt_wc(inst),
        }
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s.replace('-', "_").to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown baseline {s:?}; expected uta_wc, uta_c, full_c or opt_wc"
                ))
            })
    }
}

fn fixed(inst: &ProblemInstance, alloc: TaskAllocation, scheme: Baseline) -> Result<SolveReport> {
    let sol = solve_inner(inst, &alloc)?;
    let timeline = evaluate_timeline(inst, &alloc, &sol.plan)?;
    Ok(SolveReport {
        scheme: scheme.name().into(),
        allocation: alloc,
        plan: sol.plan,
        timeline,
        iterations: sol.newton_steps,
        bound_gap: sol.kkt_residual,
        diagnostics: Vec::new(),
    })
}

/// `ω = (0, 1/M, …, 1/M)`.
pub fn uta_wc(inst: &ProblemInstance) -> Result<SolveReport> {
    fixed(
        inst,
        TaskAllocation::uniform_individual(inst.num_uavs()),
        Baseline::UtaWc,
    )
}

/// `ω = (1/(M+1), …, 1/(M+1))`.
pub fn uta_c(inst: &ProblemInstance) -> Result<SolveReport> {
    fixed(
        inst,
        TaskAllocation::uniform_with_common(inst.num_uavs()),
        Baseline::UtaC,
    )
}

/// `ω = (1, 0, …, 0)`.
pub fn full_c(inst: &ProblemInstance) -> Result<SolveReport> {
    fixed(inst, TaskAllocation::full_common(inst.num_uavs()), Baseline::FullC)
}

/// Optimal allocation with `ω_0 = 0`.
pub fn opt_wc(inst: &ProblemInstance) -> Result<SolveReport> {
    let mut r = solve_degenerate(inst)?;
    r.scheme = Baseline::OptWc.name().into();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::tau_from_energy;
    use crate::model::validate_solution;

    fn defaults() -> ProblemInstance {
        ProblemInstance::paper_default()
    }

    #[test]
    fn default_values() {
        let inst = defaults();
        let wc = uta_wc(&inst).unwrap();
        assert!((wc.total_t() - 29.756).abs() < 29.756e-3);
        let c = uta_c(&inst).unwrap();
        assert!((c.total_t() - 28.70).abs() < 0.01, "{}", c.total_t());
        let full = full_c(&inst).unwrap();
        let expected = 2.0 + 2e7 / (1e5 * 361f64.log2());
        assert!((full.total_t() - expected).abs() < 1e-6 * expected);
        assert!((expected - 25.54).abs() < 0.01);
        for r in [wc, c, full] {
            assert!(
                validate_solution(&inst, &r.allocation, &r.plan).is_empty(),
                "{}",
                r.scheme
            );
        }
    }

    #[test]
    fn uta_c_phases() {
        let inst = defaults();
        let r = uta_c(&inst).unwrap();
        let tl = &r.timeline;
        assert!((tl.sense_end[0] - 1.0).abs() < 1e-9);
        let ind: Vec<f64> = (0..3).map(|m| 0.25 * 2e7 * r.plan.t_n[m]).collect();
        for (got, want) in ind.iter().zip([7.683, 7.227, 6.908]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        assert!((tl.coop_end - tl.coop_start - 5.886).abs() < 1e-3);
    }

    #[test]
    fn full_c_sensing_dominated() {
        let inst = defaults().with_beta_s(10.0).unwrap();
        assert!((full_c(&inst).unwrap().total_t() - 33.54).abs() < 0.01);
    }

    #[test]
    fn full_c_below_shannon_floor() {
        let floor = 2e7 * std::f64::consts::LN_2 / (1e5 * 3.6e4);
        assert!((floor - 3.85e-3).abs() < 1e-5);
        let inst = defaults().with_energy_budget(0.99 * floor).unwrap();
        assert!(matches!(full_c(&inst), Err(Error::Infeasible(_))));
        let inst = defaults().with_energy_budget(1.05 * floor).unwrap();
        assert!(full_c(&inst).is_ok());
    }

    #[test]
    fn single_uav_cases() {
        let inst = ProblemInstance::new(vec![9e3], 2e7, 2.0, 1e5, 0.01, 1.0).unwrap();
        let wc = uta_wc(&inst).unwrap();
        let deg = solve_degenerate(&inst).unwrap();
        assert!((wc.total_t() - deg.total_t()).abs() < 1e-6 * deg.total_t());
        assert_eq!(uta_c(&inst).unwrap().allocation.omega(), &[0.5, 0.5]);
    }

    #[test]
    fn tight_budget_uses_energy_binding_times() {
        // Just above UAV 3's floor for a third of the data.
        let inst = defaults().with_energy_budget(0.012).unwrap();
        let r = uta_wc(&inst).unwrap();
        for m in 0..3 {
            let tau = tau_from_energy(1.0 / 3.0, inst.gamma()[m], 0.012, &inst).unwrap();
            assert!(
                (r.plan.t_n[m] - tau).abs() < 1e-6 * tau,
                "uav {m}: {} vs {tau}",
                r.plan.t_n[m]
            );
        }
    }

    #[test]
    fn names_round_trip() {
        for b in Baseline::ALL {
            assert_eq!(b.name().parse::<Baseline>().unwrap(), b);
        }
        assert_eq!("Full-C".parse::<Baseline>().unwrap(), Baseline::FullC);
        assert!("nope".parse::<Baseline>().is_err());
    }
}
