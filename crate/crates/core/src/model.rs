//! Scenario description, decision variables, and exact evaluation of the
//! mission timeline and per-UAV energy.
//!
//! UAVs are kept sorted by channel gain (weakest first) internally. Every
//! per-UAV vector in this module uses that sorted order; use
//! [`ProblemInstance::to_caller_order`] to report in the order the caller
//! supplied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{snr_for_time, time_per_bit};

/// Tolerance on `Σω = 1`.
pub const SUM_TOL: f64 = 1e-9;
/// Relative slack on the energy budget accepted by [`validate_solution`].
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct ProblemInstance {
    gamma: Vec<f64>,
    /// `order[i]` is the caller's index of the UAV stored at sorted slot `i`.
    order: Vec<usize>,
    c_bits: f64,
    beta_s: f64,
    bandwidth: f64,
    p_max: f64,
    energy_budget: f64,
}

/// Flat JSON document for [`ProblemInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub gamma: Vec<f64>,
    #[serde(rename = "C_bits")]
    pub c_bits: f64,
    pub beta_s_sec: f64,
    pub bandwidth_hz: f64,
    pub p_max_w: f64,
    pub energy_budget_j: f64,
}

impl TryFrom<InstanceDoc> for ProblemInstance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        ProblemInstance::new(
            doc.gamma,
            doc.c_bits,
            doc.beta_s_sec,
            doc.bandwidth_hz,
            doc.p_max_w,
            doc.energy_budget_j,
        )
    }
}

impl From<ProblemInstance> for InstanceDoc {
    fn from(inst: ProblemInstance) -> Self {
        InstanceDoc {
            gamma: inst.to_caller_order(&inst.gamma),
            c_bits: inst.c_bits,
            beta_s_sec: inst.beta_s,
            bandwidth_hz: inst.bandwidth,
            p_max_w: inst.p_max,
            energy_budget_j: inst.energy_budget,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ProblemInstance {
    pub fn new(
        gamma: Vec<f64>,
        c_bits: f64,
        beta_s: f64,
        bandwidth: f64,
        p_max: f64,
        energy_budget: f64,
    ) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidInstance("at least one UAV is required".into()));
        }
        for &g in &gamma {
            positive("gamma", g)?;
        }
        positive("C_bits", c_bits)?;
        positive("bandwidth_hz", bandwidth)?;
        positive("p_max_w", p_max)?;
        positive("energy_budget_j", energy_budget)?;
        if !(beta_s >= 0.0) || !beta_s.is_finite() {
            return Err(Error::InvalidInstance(format!("beta_s must be >= 0, got {beta_s}")));
        }
        let mut order: Vec<usize> = (0..gamma.len()).collect();
        // Stable sort keeps equal gains in caller order.
        order.sort_by(|&a, &b| gamma[a].total_cmp(&gamma[b]));
        let sorted = order.iter().map(|&i| gamma[i]).collect();
        Ok(Self {
            gamma: sorted,
            order,
            c_bits,
            beta_s,
            bandwidth,
            p_max,
            energy_budget,
        })
    }

    /// Simulation defaults: three UAVs, 20 Mbit over 100 kHz, 10 mW, 1 J, 2 s.
    pub fn paper_default() -> Self {
        Self::new(vec![9e3, 1.2e4, 1.5e4], 2e7, 2.0, 1e5, 0.01, 1.0).expect("default instance is valid")
    }

    /// Channel gains for `m` UAVs continuing the default 9e3, 1.2e4, 1.5e4
    /// progression (step 3e3).
    pub fn default_gains(m: usize) -> Vec<f64> {
        (0..m).map(|i| 9e3 + 3e3 * i as f64).collect()
    }

    pub fn num_uavs(&self) -> usize {
        self.gamma.len()
    }
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
    pub fn c_bits(&self) -> f64 {
        self.c_bits
    }
    pub fn beta_s(&self) -> f64 {
        self.beta_s
    }
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
    pub fn p_max(&self) -> f64 {
        self.p_max
    }
    pub fn energy_budget(&self) -> f64 {
        self.energy_budget
    }
    pub fn gamma_sum(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// Per-bit time of UAV `m` transmitting alone at full power.
    pub fn t_n_min(&self, m: usize) -> f64 {
        time_per_bit(self.p_max * self.gamma[m], self.bandwidth)
    }

    /// Per-bit time of the cooperative link with every UAV at full power.
    pub fn t_c_min(&self) -> f64 {
        time_per_bit(self.p_max * self.gamma_sum(), self.bandwidth)
    }

    pub fn with_beta_s(&self, beta_s: f64) -> Result<Self> {
        let mut d: InstanceDoc = self.clone().into();
        d.beta_s_sec = beta_s;
        d.try_into()
    }
    pub fn with_energy_budget(&self, e: f64) -> Result<Self> {
        let mut d: InstanceDoc = self.clone().into();
        d.energy_budget_j = e;
        d.try_into()
    }
    pub fn with_p_max(&self, p_max: f64) -> Result<Self> {
        let mut d: InstanceDoc = self.clone().into();
        d.p_max_w = p_max;
        d.try_into()
    }
    pub fn with_gamma(&self, gamma: Vec<f64>) -> Result<Self> {
        let mut d: InstanceDoc = self.clone().into();
        d.gamma = gamma;
        d.try_into()
    }

    /// Reorders a per-UAV vector from sorted order to caller order.
    pub fn to_caller_order<T: Copy>(&self, sorted: &[T]) -> Vec<T> {
        assert_eq!(sorted.len(), self.order.len());
        let mut out = sorted.to_vec();
        for (slot, &caller) in self.order.iter().enumerate() {
            out[caller] = sorted[slot];
        }
        out
    }

    /// `order[i]` = caller index of sorted UAV `i`.
    pub fn caller_indices(&self) -> &[usize] {
        &self.order
    }
}

/// Task ratios `(ω_0, ω_1, …, ω_M)`: common task first, then the individual
/// tasks of the UAVs in sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TaskAllocation {
    omega: Vec<f64>,
}

impl TryFrom<Vec<f64>> for TaskAllocation {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TaskAllocation::new(v)
    }
}

impl From<TaskAllocation> for Vec<f64> {
    fn from(a: TaskAllocation) -> Self {
        a.omega
    }
}

/// Ordering slack for `ω_m <= ω_{m+1}`.
const ORDER_TOL: f64 = 1e-9;

impl TaskAllocation {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 {
            return Err(Error::InvalidAllocation(format!(
                "need at least two ratios (common + one UAV), got {}",
                omega.len()
            )));
        }
        for (i, &w) in omega.iter().enumerate() {
            if !(-1e-12..=1.0 + 1e-12).contains(&w) {
                return Err(Error::InvalidAllocation(format!("omega_{i} = {w} outside [0, 1]")));
            }
        }
        let sum: f64 = omega.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidAllocation(format!("ratios sum to {sum}, not 1")));
        }
        for m in 1..omega.len() - 1 {
            if omega[m] > omega[m + 1] + ORDER_TOL {
                return Err(Error::InvalidAllocation(format!(
                    "individual ratios must be non-decreasing: omega_{m} = {} > omega_{} = {}",
                    omega[m],
                    m + 1,
                    omega[m + 1]
                )));
            }
        }
        let omega = omega.into_iter().map(|w| w.clamp(0.0, 1.0)).collect();
        Ok(Self { omega })
    }

    /// `ω_m = 1/M` for every UAV, no common task.
    pub fn uniform_individual(m: usize) -> Self {
        let mut omega = vec![1.0 / m as f64; m + 1];
        omega[0] = 0.0;
        Self { omega }
    }

    /// `ω_i = 1/(M+1)` for the common task and every UAV.
    pub fn uniform_with_common(m: usize) -> Self {
        Self {
            omega: vec![1.0 / (m + 1) as f64; m + 1],
        }
    }

    /// Every UAV senses the whole mission.
    pub fn full_common(m: usize) -> Self {
        let mut omega = vec![0.0; m + 1];
        omega[0] = 1.0;
        Self { omega }
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
    pub fn common(&self) -> f64 {
        self.omega[0]
    }
    /// Ratio of UAV `m` (sorted, 0-based).
    pub fn individual(&self, m: usize) -> f64 {
        self.omega[m + 1]
    }
    pub fn num_uavs(&self) -> usize {
        self.omega.len() - 1
    }
}

/// Per-bit times, powers, and cooperative energy split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    pub t_n: Vec<f64>,
    pub t_c: f64,
    pub p_n: Vec<f64>,
    pub p_c: Vec<f64>,
    pub e_c: Vec<f64>,
}

impl TransmissionPlan {
    /// Everyone at full power, both phases. Cooperative energy follows from
    /// the allocation.
    pub fn full_power(inst: &ProblemInstance, alloc: &TaskAllocation) -> Self {
        let m = inst.num_uavs();
        let t_c = inst.t_c_min();
        let e = alloc.common() * inst.c_bits() * t_c * inst.p_max();
        Self {
            t_n: (0..m).map(|i| inst.t_n_min(i)).collect(),
            t_c,
            p_n: vec![inst.p_max(); m],
            p_c: vec![inst.p_max(); m],
            e_c: vec![e; m],
        }
    }

    fn check_dims(&self, m: usize) -> Result<()> {
        for (what, len) in [
            ("t_n", self.t_n.len()),
            ("p_n", self.p_n.len()),
            ("p_c", self.p_c.len()),
            ("e_c", self.e_c.len()),
        ] {
            if len != m {
                return Err(Error::DimensionMismatch {
                    what,
                    got: len,
                    expected: m,
                });
            }
        }
        Ok(())
    }
}

/// Start and end instants of every phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionTimeline {
    pub sense_end: Vec<f64>,
    pub tx_start: Vec<f64>,
    pub tx_end: Vec<f64>,
    pub coop_start: f64,
    pub coop_end: f64,
    pub total_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

impl Diagnostic {
    pub fn new(name: impl Into<String>, passed: bool, residual: f64) -> Self {
        Self {
            name: name.into(),
            passed,
            residual,
        }
    }
}

/// A violated constraint and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub uav: Option<usize>,
    pub residual: f64,
}

/// Everything a solver returns for one scheme on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: String,
    pub allocation: TaskAllocation,
    pub plan: TransmissionPlan,
    pub timeline: MissionTimeline,
    pub iterations: usize,
    pub bound_gap: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl SolveReport {
    pub fn total_t(&self) -> f64 {
        self.timeline.total_t
    }

    /// Energy drawn by every UAV (sorted order).
    pub fn energies(&self, inst: &ProblemInstance) -> Vec<f64> {
        (0..inst.num_uavs())
            .map(|m| energy_raw(inst, self.allocation.omega(), &self.plan, m))
            .collect()
    }
}

/// A solved scenario as stored on disk by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub instance: ProblemInstance,
    pub report: SolveReport,
}

/// Timeline for arbitrary non-negative ratios (they need not sum to one).
pub(crate) fn timeline_raw(inst: &ProblemInstance, omega: &[f64], plan: &TransmissionPlan) -> MissionTimeline {
    let m = inst.num_uavs();
    let c = inst.c_bits();
    let beta = inst.beta_s();
    let w0 = omega[0];
    let sense_end: Vec<f64> = (0..m).map(|i| (omega[i + 1] + w0) * beta).collect();
    let mut tx_start = vec![0.0; m];
    let mut tx_end = vec![0.0; m];
    let mut channel_free = f64::NEG_INFINITY;
    for i in 0..m {
        // TDMA in index order: wait for own sensing and for the channel.
        tx_start[i] = sense_end[i].max(channel_free);
        tx_end[i] = tx_start[i] + omega[i + 1] * c * plan.t_n[i];
        channel_free = tx_end[i];
    }
    let coop_start = tx_end[m - 1];
    let coop_end = coop_start + w0 * c * plan.t_c;
    MissionTimeline {
        sense_end,
        tx_start,
        tx_end,
        coop_start,
        coop_end,
        total_t: coop_end,
    }
}

/// Slows down every UAV that would otherwise leave the channel idle before
/// the next UAV finishes sensing, so it finishes exactly then. The mission
/// time is unchanged and energy only drops.
pub(crate) fn fill_idle_gaps(inst: &ProblemInstance, omega: &[f64], plan: &mut TransmissionPlan) {
    let m = inst.num_uavs();
    let tl = timeline_raw(inst, omega, plan);
    for i in 0..m.saturating_sub(1) {
        let bits = omega[i + 1] * inst.c_bits();
        if bits > 0.0 && tl.tx_end[i] < tl.sense_end[i + 1] {
            let t = (tl.sense_end[i + 1] - tl.tx_start[i]) / bits;
            if t > plan.t_n[i] {
                plan.t_n[i] = t;
                plan.p_n[i] = (snr_for_time(t, inst.bandwidth()) / inst.gamma()[i]).min(inst.p_max());
            }
        }
    }
}

fn check_dims(inst: &ProblemInstance, alloc: &TaskAllocation, plan: &TransmissionPlan) -> Result<()> {
    let m = inst.num_uavs();
    if alloc.num_uavs() != m {
        return Err(Error::DimensionMismatch {
            what: "allocation",
            got: alloc.num_uavs(),
            expected: m,
        });
    }
    plan.check_dims(m)
}

/// Mission timeline of `(alloc, plan)`: sensing in parallel, independent
/// uploads serialized in UAV order, then one cooperative upload.
pub fn evaluate_timeline(
    inst: &ProblemInstance,
    alloc: &TaskAllocation,
    plan: &TransmissionPlan,
) -> Result<MissionTimeline> {
    check_dims(inst, alloc, plan)?;
    Ok(timeline_raw(inst, alloc.omega(), plan))
}

pub(crate) fn energy_raw(inst: &ProblemInstance, omega: &[f64], plan: &TransmissionPlan, m: usize) -> f64 {
    let c = inst.c_bits();
    omega[0] * c * plan.t_c * plan.p_c[m] + omega[m + 1] * c * plan.t_n[m] * plan.p_n[m]
}

/// Transmit energy of UAV `m` (sorted, 0-based) over both upload phases.
pub fn energy_consumption(
    inst: &ProblemInstance,
    alloc: &TaskAllocation,
    plan: &TransmissionPlan,
    m: usize,
) -> Result<f64> {
    check_dims(inst, alloc, plan)?;
    if m >= inst.num_uavs() {
        return Err(Error::IndexOutOfRange {
            index: m,
            len: inst.num_uavs(),
        });
    }
    Ok(energy_raw(inst, alloc.omega(), plan, m))
}

/// Lists every violated constraint. Empty means the solution is feasible.
pub fn validate_solution(inst: &ProblemInstance, alloc: &TaskAllocation, plan: &TransmissionPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |constraint: &str, uav: Option<usize>, residual: f64| {
        out.push(Violation {
            constraint: constraint.to_string(),
            uav,
            residual,
        })
    };
    if let Err(e) = check_dims(inst, alloc, plan) {
        push(&format!("dimensions: {e}"), None, f64::NAN);
        return out;
    }
    let m = inst.num_uavs();
    let omega = alloc.omega();
    let p_max = inst.p_max();
    let e_bar = inst.energy_budget();
    let c = inst.c_bits();
    let b = inst.bandwidth();

    let sum: f64 = omega.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        push("ratio_sum", None, sum - 1.0);
    }
    for i in 0..m {
        let e = energy_raw(inst, omega, plan, i);
        if e > e_bar * (1.0 + ENERGY_TOL) {
            push("energy_budget", Some(i), e - e_bar);
        }
        for (name, p) in [("power_independent", plan.p_n[i]), ("power_cooperative", plan.p_c[i])] {
            if !(p >= 0.0) || p > p_max * (1.0 + 1e-9) {
                push(name, Some(i), if p < 0.0 { p } else { p - p_max });
            }
        }
        let floor = inst.t_n_min(i);
        if plan.t_n[i] < floor - 1e-12 {
            push("time_floor_independent", Some(i), plan.t_n[i] - floor);
        }
        let p_expected = snr_for_time(plan.t_n[i], b) / inst.gamma()[i];
        if (plan.p_n[i] - p_expected).abs() > 1e-9 * p_expected.max(1e-300) {
            push("power_time_consistency", Some(i), plan.p_n[i] - p_expected);
        }
    }
    if omega[0] > 0.0 {
        let floor = inst.t_c_min();
        if plan.t_c < floor - 1e-12 {
            push("time_floor_cooperative", None, plan.t_c - floor);
        }
        let snr: f64 = (0..m).map(|i| plan.p_c[i] * inst.gamma()[i]).sum();
        let needed = snr_for_time(plan.t_c, b);
        if (snr - needed).abs() > 1e-9 * needed {
            push("cooperative_rate_consistency", None, snr - needed);
        }
        for i in 0..m {
            let used = omega[0] * c * plan.t_c * plan.p_c[i];
            if (plan.e_c[i] - used).abs() > 1e-9 * e_bar {
                push("cooperative_energy_split", Some(i), plan.e_c[i] - used);
            }
        }
    }

    // Causality on the evaluated timeline: a UAV with data keeps the channel
    // busy until the next UAV has finished sensing.
    let tl = timeline_raw(inst, omega, plan);
    let scale = 1e-9 * (1.0 + tl.total_t);
    for i in 0..m.saturating_sub(1) {
        if omega[i + 1] > 0.0 && tl.tx_end[i] < tl.sense_end[i + 1] - scale {
            push("causality", Some(i), tl.tx_end[i] - tl.sense_end[i + 1]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_plan(t_n: Vec<f64>, t_c: f64) -> TransmissionPlan {
        let m = t_n.len();
        TransmissionPlan {
            t_n,
            t_c,
            p_n: vec![0.0; m],
            p_c: vec![0.0; m],
            e_c: vec![0.0; m],
        }
    }

    #[test]
    fn two_uav_unrolling() {
        // Ratios and per-bit times chosen so that T^s = (1, 2), T^n = (3, 1)
        // and T^c = 0.5 with C = 1.
        let inst = ProblemInstance::new(vec![1.0, 2.0], 1.0, 2.5, 1.0, 1.0, 1.0).unwrap();
        let omega = [0.2, 0.2, 0.6];
        let plan = synthetic_plan(vec![15.0, 1.0 / 0.6], 2.5);
        let tl = timeline_raw(&inst, &omega, &plan);
        assert!((tl.sense_end[0] - 1.0).abs() < 1e-12);
        assert!((tl.sense_end[1] - 2.0).abs() < 1e-12);
        assert!((tl.tx_start[1] - 4.0).abs() < 1e-12);
        assert!((tl.total_t - 5.5).abs() < 1e-12);
        // Closed form: max_k (T^s_k + sum_{j>=k} T^n_j) + T^c.
        let closed = (1.0f64 + 3.0 + 1.0).max(2.0 + 1.0) + 0.5;
        assert!((tl.total_t - closed).abs() < 1e-12);
    }

    #[test]
    fn single_uav_full_power() {
        let inst = ProblemInstance::new(vec![9e3], 2e7, 2.0, 1e5, 0.01, 1.0).unwrap();
        let alloc = TaskAllocation::new(vec![0.0, 1.0]).unwrap();
        let plan = TransmissionPlan::full_power(&inst, &alloc);
        let tl = evaluate_timeline(&inst, &alloc, &plan).unwrap();
        let oracle = 2.0 + 2e7 / (1e5 * 91f64.log2());
        assert!((tl.total_t - oracle).abs() < 1e-9);
        assert!((tl.total_t - 32.73).abs() < 0.01);
    }

    #[test]
    fn uniform_split_at_defaults() {
        let inst = ProblemInstance::paper_default();
        let alloc = TaskAllocation::uniform_individual(3);
        let plan = TransmissionPlan::full_power(&inst, &alloc);
        let tl = evaluate_timeline(&inst, &alloc, &plan).unwrap();
        let oracle: f64 = [9e3, 1.2e4, 1.5e4]
            .iter()
            .map(|g: &f64| (2e7 / 3.0) / (1e5 * (1.0 + 0.01 * g).log2()))
            .sum::<f64>()
            + 2.0 / 3.0;
        assert!((tl.total_t - oracle).abs() < 1e-9);
        assert!((tl.total_t - 29.756).abs() < 2e-3);
        assert!(validate_solution(&inst, &alloc, &plan).is_empty());
    }

    #[test]
    fn energy_examples() {
        let inst = ProblemInstance::paper_default();
        let alloc = TaskAllocation::uniform_individual(3);
        let plan = TransmissionPlan::full_power(&inst, &alloc);
        let e = energy_consumption(&inst, &alloc, &plan, 0).unwrap();
        let oracle = 2e7 / 3.0 * inst.t_n_min(0) * 0.01;
        assert!((e - oracle).abs() < 1e-15);
        assert!((e - 0.10244).abs() < 1e-4);

        let full = TaskAllocation::full_common(3);
        let plan = TransmissionPlan::full_power(&inst, &full);
        let e = energy_consumption(&inst, &full, &plan, 2).unwrap();
        assert!((e - 2e7 * inst.t_c_min() * 0.01).abs() < 1e-15);
        assert!((e - 0.2354).abs() < 1e-4);

        let mut zero = plan.clone();
        zero.p_c = vec![0.0; 3];
        zero.p_n = vec![0.0; 3];
        assert_eq!(energy_consumption(&inst, &full, &zero, 1).unwrap(), 0.0);
        assert!(energy_consumption(&inst, &full, &zero, 3).is_err());
    }

    #[test]
    fn energy_violation_reported_per_uav() {
        let inst = ProblemInstance::paper_default().with_energy_budget(0.05).unwrap();
        let alloc = TaskAllocation::uniform_individual(3);
        let plan = TransmissionPlan::full_power(&inst, &alloc);
        let v = validate_solution(&inst, &alloc, &plan);
        let energy: Vec<_> = v.iter().filter(|v| v.constraint == "energy_budget").collect();
        assert_eq!(energy.len(), 3);
        assert_eq!(energy[0].uav, Some(0));
        assert!((energy[0].residual - 0.0524).abs() < 1e-4);
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn dimension_mismatch() {
        let inst = ProblemInstance::paper_default();
        let alloc = TaskAllocation::uniform_individual(2);
        let plan = TransmissionPlan::full_power(&inst, &TaskAllocation::uniform_individual(3));
        assert!(matches!(
            evaluate_timeline(&inst, &alloc, &plan),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn allocation_invariants() {
        assert!(TaskAllocation::new(vec![0.5, 0.3]).is_err());
        assert!(TaskAllocation::new(vec![0.0, 0.6, 0.4]).is_err());
        assert!(TaskAllocation::new(vec![-0.1, 0.5, 0.6]).is_err());
        assert!(TaskAllocation::new(vec![0.2, 0.4, 0.4]).is_ok());
    }

    #[test]
    fn instance_sorting_and_caller_order() {
        let inst = ProblemInstance::new(vec![3.0, 1.0, 2.0], 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(inst.gamma(), &[1.0, 2.0, 3.0]);
        assert_eq!(inst.to_caller_order(&[10, 20, 30]), vec![30, 10, 20]);
        let json = serde_json::to_string(&inst).unwrap();
        assert!(json.contains("\"gamma\":[3.0,1.0,2.0]"));
        let back: ProblemInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn instance_rejects_bad_parameters() {
        assert!(ProblemInstance::new(vec![], 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![0.0], 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 1.0, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 1.0, 0.0, 1.0, 1.0, 1.0).is_ok());
        assert!(ProblemInstance::new(vec![1.0], 1.0, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn json_keys() {
        let doc: InstanceDoc = ProblemInstance::paper_default().into();
        let v = serde_json::to_value(&doc).unwrap();
        for key in [
            "gamma",
            "C_bits",
            "beta_s_sec",
            "bandwidth_hz",
            "p_max_w",
            "energy_budget_j",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
