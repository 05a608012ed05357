use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Scheme;
use crate::error::{Error, Result};
use crate::model::{InstanceDoc, ProblemInstance, SolveReport};

/// Instance parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    BetaS,
    EnergyBudget,
    PMax,
    /// Fleet size; gains follow [`ProblemInstance::default_gains`].
    NumUavs,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::BetaS => "beta_s",
            SweepParam::EnergyBudget => "energy_budget",
            SweepParam::PMax => "p_max",
            SweepParam::NumUavs => "num_uavs",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &ProblemInstance, value: f64) -> Result<ProblemInstance> {
        match self {
            SweepParam::BetaS => base.with_beta_s(value),
            SweepParam::EnergyBudget => base.with_energy_budget(value),
            SweepParam::PMax => base.with_p_max(value),
            SweepParam::NumUavs => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "fleet size must be a positive integer, got {value}"
                    )));
                }
                base.with_gamma(ProblemInstance::default_gains(value as usize))
            }
        }
    }

    /// Documented default grid for this parameter.
    pub fn default_values(self) -> Vec<f64> {
        let grid = |start: f64, step: f64, n: usize| (0..n).map(|i| start + step * i as f64).collect::<Vec<_>>();
        match self {
            SweepParam::BetaS => grid(1.0, 0.5, 19),
            SweepParam::EnergyBudget => (1..=20).map(|i| i as f64 * 0.05).collect(),
            SweepParam::PMax => (1..=10).map(|i| i as f64 * 2e-3).collect(),
            SweepParam::NumUavs => grid(1.0, 1.0, 6),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParam::BetaS,
            SweepParam::EnergyBudget,
            SweepParam::PMax,
            SweepParam::NumUavs,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown sweep parameter {s:?}")))
    }
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

/// One-dimensional parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    /// Recorded with the run; no sweep component is randomized.
    #[serde(default)]
    pub seed: u64,
}

impl SweepSpec {
    /// Sweep over the default grid with every scheme.
    pub fn default_grid(param: SweepParam) -> Self {
        Self {
            param,
            values: param.default_values(),
            schemes: all_schemes(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("sweep needs at least one scheme".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("sweep value {v} is not finite")));
        }
        Ok(())
    }
}

/// One solved (value, scheme) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub param: SweepParam,
    pub value: f64,
    pub scheme: Scheme,
    pub instance: InstanceDoc,
    pub total_t: f64,
    pub omega: Vec<f64>,
    pub energies: Vec<f64>,
    pub t_c: f64,
    pub t_n: Vec<f64>,
    pub iterations: usize,
    pub bound_gap: f64,
}

impl ResultRow {
    /// Row for `report`; per-UAV columns are in the caller's UAV order.
    pub fn new(param: SweepParam, value: f64, scheme: Scheme, inst: &ProblemInstance, report: &SolveReport) -> Self {
        let omega = report.allocation.omega();
        let mut omega_out = vec![omega[0]];
        omega_out.extend(inst.to_caller_order(&omega[1..]));
        Self {
            param,
            value,
            scheme,
            instance: inst.clone().into(),
            total_t: report.total_t(),
            omega: omega_out,
            energies: inst.to_caller_order(&report.energies(inst)),
            t_c: report.plan.t_c,
            t_n: inst.to_caller_order(&report.plan.t_n),
            iterations: report.iterations,
            bound_gap: report.bound_gap,
        }
    }
}

/// A (value, scheme) point that could not be solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub value: f64,
    pub scheme: Scheme,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<SweepFailure>,
}

/// Solves every (value, scheme) pair in parallel; rows come back sorted by
/// value, then scheme.
pub fn run_sweep(spec: &SweepSpec, base: &ProblemInstance, epsilon: f64) -> Result<SweepOutcome> {
    spec.validate()?;
    let jobs: Vec<(usize, f64, Scheme)> = spec
        .values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| spec.schemes.iter().map(move |&s| (i, v, s)))
        .collect();
    let results: Vec<(usize, f64, Scheme, std::result::Result<ResultRow, String>)> = jobs
        .into_par_iter()
        .map(|(i, v, s)| {
            let row = spec
                .param
                .apply(base, v)
                .and_then(|inst| {
                    s.solve(&inst, epsilon)
                        .map(|r| ResultRow::new(spec.param, v, s, &inst, &r))
                })
                .map_err(|e| e.to_string());
            (i, v, s, row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (_, v, s, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(error) => failures.push(SweepFailure {
                value: v,
                scheme: s,
                error,
            }),
        }
    }
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.scheme.cmp(&b.scheme)));
    failures.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.scheme.cmp(&b.scheme)));
    Ok(SweepOutcome { rows, failures })
}

/// Writes rows as CSV. Per-UAV columns are sized for the largest fleet;
/// shorter rows leave the extra cells empty.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let m = rows.iter().map(|r| r.t_n.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["param", "value", "scheme", "T_total", "omega_0"]
        .map(String::from)
        .to_vec();
    header.extend((1..=m).map(|i| format!("omega_{i}")));
    header.extend((1..=m).map(|i| format!("E_{i}")));
    header.push("t_c".into());
    header.extend((1..=m).map(|i| format!("t_n_{i}")));
    header.push("iters".into());
    header.push("gap".into());
    w.write_record(&header)?;
    let pad = |v: &[f64]| -> Vec<String> {
        (0..m)
            .map(|i| v.get(i).map(|x| x.to_string()).unwrap_or_default())
            .collect()
    };
    for r in rows {
        let mut rec = vec![
            r.param.to_string(),
            r.value.to_string(),
            r.scheme.to_string(),
            r.total_t.to_string(),
            r.omega[0].to_string(),
        ];
        rec.extend(pad(&r.omega[1..]));
        rec.extend(pad(&r.energies));
        rec.push(r.t_c.to_string());
        rec.extend(pad(&r.t_n));
        rec.push(r.iterations.to_string());
        rec.push(r.bound_gap.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV to a sibling temporary file and renames it into place.
pub fn write_csv_atomic(rows: &[ResultRow], path: &Path) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_csv(rows, &mut tmp)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Mean percentage by which each baseline exceeds the proposed scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Scheme name → (mean gap in percent, number of values compared).
    pub mean_gap_percent: BTreeMap<String, (f64, usize)>,
}

pub fn summarize(rows: &[ResultRow]) -> SweepSummary {
    let mut proposed = BTreeMap::new();
    for r in rows.iter().filter(|r| r.scheme == Scheme::Proposed) {
        proposed.insert(r.value.to_bits(), r.total_t);
    }
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.scheme != Scheme::Proposed) {
        if let Some(&p) = proposed.get(&r.value.to_bits()) {
            let e = acc.entry(r.scheme.to_string()).or_insert((0.0, 0));
            e.0 += 100.0 * (r.total_t - p) / p;
            e.1 += 1;
        }
    }
    for v in acc.values_mut() {
        v.0 /= v.1 as f64;
    }
    SweepSummary { mean_gap_percent: acc }
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (scheme, (gap, n)) in &self.mean_gap_percent {
            writeln!(f, "{scheme}: {gap:+.2}% vs proposed (mean over {n} values)")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::Baseline;

    #[test]
    fn default_grids() {
        let b = SweepParam::BetaS.default_values();
        assert_eq!(b.len(), 19);
        assert_eq!((b[0], b[18]), (1.0, 10.0));
        let e = SweepParam::EnergyBudget.default_values();
        assert!((e[0] - 0.05).abs() < 1e-15 && (e[19] - 1.0).abs() < 1e-15);
        let p = SweepParam::PMax.default_values();
        assert!((p[0] - 2e-3).abs() < 1e-15 && (p[9] - 2e-2).abs() < 1e-15);
    }

    #[test]
    fn fleet_size_extends_gains() {
        let inst = SweepParam::NumUavs
            .apply(&ProblemInstance::paper_default(), 5.0)
            .unwrap();
        assert_eq!(inst.gamma(), &[9e3, 1.2e4, 1.5e4, 1.8e4, 2.1e4]);
        assert!(SweepParam::NumUavs
            .apply(&ProblemInstance::paper_default(), 2.5)
            .is_err());
    }

    #[test]
    fn single_value_sweep_matches_solve_auto() {
        let spec = SweepSpec {
            param: SweepParam::BetaS,
            values: vec![3.0],
            schemes: vec![Scheme::Proposed],
            seed: 0,
        };
        let base = ProblemInstance::paper_default();
        let out = run_sweep(&spec, &base, 1e-3).unwrap();
        assert_eq!(out.rows.len(), 1);
        let direct = super::super::solve_auto(&base.with_beta_s(3.0).unwrap(), 1e-3).unwrap();
        assert_eq!(out.rows[0].total_t, direct.total_t());
    }

    #[test]
    fn csv_layout_and_determinism() {
        let spec = SweepSpec {
            param: SweepParam::NumUavs,
            values: vec![2.0, 1.0],
            schemes: vec![Scheme::Baseline(Baseline::FullC), Scheme::Proposed],
            seed: 0,
        };
        let base = ProblemInstance::paper_default();
        let mut a = Vec::new();
        write_csv(&run_sweep(&spec, &base, 1e-3).unwrap().rows, &mut a).unwrap();
        let mut b = Vec::new();
        write_csv(&run_sweep(&spec, &base, 1e-3).unwrap().rows, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "param,value,scheme,T_total,omega_0,omega_1,omega_2,E_1,E_2,t_c,t_n_1,t_n_2,iters,gap"
        );
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("num_uavs,1,proposed,"));
        assert!(lines[2].starts_with("num_uavs,1,full_c,"));
        // Single-UAV rows leave the second UAV's cells empty.
        assert!(lines[1].contains(",,"));
    }

    #[test]
    fn summary_gaps() {
        let spec = SweepSpec {
            param: SweepParam::BetaS,
            values: vec![2.0],
            schemes: vec![Scheme::Proposed, Scheme::Baseline(Baseline::UtaWc)],
            seed: 0,
        };
        let out = run_sweep(&spec, &ProblemInstance::paper_default(), 1e-3).unwrap();
        let s = summarize(&out.rows);
        let (gap, n) = s.mean_gap_percent["uta_wc"];
        assert_eq!(n, 1);
        assert!((gap - 100.0 * (29.756 - 25.5409) / 25.5409).abs() < 0.05);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, "old").unwrap();
        write_csv_atomic(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("param,value,scheme,T_total,omega_0"));
    }
}
