//! Python bindings for the `coopsense` solvers.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;

use coopsense::analysis;
use coopsense::baselines::Baseline;
use coopsense::harness::{self, SweepParam, SweepSpec};
use coopsense::{degenerate, inner, polyblock, Error};

create_exception!(
    coopsense_py,
    InfeasibleError,
    PyException,
    "No allocation meets the energy budget."
);
create_exception!(
    coopsense_py,
    ConvergenceError,
    PyException,
    "A solver stopped before reaching its tolerance."
);

fn to_py(err: Error) -> PyErr {
    let msg = err.to_string();
    match err {
        Error::Infeasible(_) => InfeasibleError::new_err(msg),
        Error::NotConverged { .. } | Error::MaxIterations { .. } | Error::NoSignChange { .. } => {
            ConvergenceError::new_err(msg)
        }
        Error::Io(_) => PyIOError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

/// A mission scenario. Gains may be given in any order; results report
/// per-UAV quantities in that same order.
#[pyclass(name = "ProblemInstance", frozen)]
#[derive(Clone)]
struct PyInstance(coopsense::ProblemInstance);

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (gamma, c_bits, beta_s, bandwidth_hz, p_max_w, energy_budget_j))]
    fn new(
        gamma: Vec<f64>,
        c_bits: f64,
        beta_s: f64,
        bandwidth_hz: f64,
        p_max_w: f64,
        energy_budget_j: f64,
    ) -> PyResult<Self> {
        coopsense::ProblemInstance::new(gamma, c_bits, beta_s, bandwidth_hz, p_max_w, energy_budget_j)
            .map(Self)
            .map_err(to_py)
    }

    /// Three UAVs, 20 Mbit over 100 kHz, 10 mW, 1 J, 2 s.
    #[staticmethod]
    fn paper_default() -> Self {
        Self(coopsense::ProblemInstance::paper_default())
    }

    /// Gains of an `m`-UAV fleet in the default progression.
    #[staticmethod]
    fn default_gains(m: usize) -> Vec<f64> {
        coopsense::ProblemInstance::default_gains(m)
    }

    #[getter]
    fn num_uavs(&self) -> usize {
        self.0.num_uavs()
    }

    /// Gains in caller order.
    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.0.to_caller_order(self.0.gamma())
    }

    #[getter]
    fn c_bits(&self) -> f64 {
        self.0.c_bits()
    }

    #[getter]
    fn beta_s(&self) -> f64 {
        self.0.beta_s()
    }

    #[getter]
    fn bandwidth_hz(&self) -> f64 {
        self.0.bandwidth()
    }

    #[getter]
    fn p_max_w(&self) -> f64 {
        self.0.p_max()
    }

    #[getter]
    fn energy_budget_j(&self) -> f64 {
        self.0.energy_budget()
    }

    fn with_beta_s(&self, v: f64) -> PyResult<Self> {
        self.0.with_beta_s(v).map(Self).map_err(to_py)
    }

    fn with_energy_budget(&self, v: f64) -> PyResult<Self> {
        self.0.with_energy_budget(v).map(Self).map_err(to_py)
    }

    fn with_p_max(&self, v: f64) -> PyResult<Self> {
        self.0.with_p_max(v).map(Self).map_err(to_py)
    }

    fn with_gamma(&self, gamma: Vec<f64>) -> PyResult<Self> {
        self.0.with_gamma(gamma).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| to_py(e.into()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(|e| to_py(e.into()))
    }

    fn __repr__(&self) -> String {
        format!(
            "ProblemInstance(gamma={:?}, c_bits={}, beta_s={}, bandwidth_hz={}, p_max_w={}, energy_budget_j={})",
            self.gamma(),
            self.0.c_bits(),
            self.0.beta_s(),
            self.0.bandwidth(),
            self.0.p_max(),
            self.0.energy_budget()
        )
    }
}

/// Task ratios `[ω_0, ω_1, …, ω_M]`: the common task first, then the
/// individual tasks in ascending-gain order.
#[pyclass(name = "TaskAllocation", frozen)]
#[derive(Clone)]
struct PyAllocation(coopsense::TaskAllocation);

#[pymethods]
impl PyAllocation {
    #[new]
    fn new(omega: Vec<f64>) -> PyResult<Self> {
        coopsense::TaskAllocation::new(omega).map(Self).map_err(to_py)
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.0.omega().to_vec()
    }

    #[getter]
    fn common(&self) -> f64 {
        self.0.common()
    }

    fn __repr__(&self) -> String {
        format!("TaskAllocation({:?})", self.0.omega())
    }
}

/// Result of one solve.
#[pyclass(name = "SolveReport", frozen)]
struct PyReport {
    inst: coopsense::ProblemInstance,
    report: coopsense::SolveReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn scheme(&self) -> &str {
        &self.report.scheme
    }

    #[getter]
    fn total_t(&self) -> f64 {
        self.report.total_t()
    }

    #[getter]
    fn allocation(&self) -> PyAllocation {
        PyAllocation(self.report.allocation.clone())
    }

    /// `[ω_0, ω_1, …]` with individual ratios in caller order.
    #[getter]
    fn omega(&self) -> Vec<f64> {
        let w = self.report.allocation.omega();
        let mut out = vec![w[0]];
        out.extend(self.inst.to_caller_order(&w[1..]));
        out
    }

    #[getter]
    fn t_c(&self) -> f64 {
        self.report.plan.t_c
    }

    #[getter]
    fn t_n(&self) -> Vec<f64> {
        self.inst.to_caller_order(&self.report.plan.t_n)
    }

    #[getter]
    fn p_n(&self) -> Vec<f64> {
        self.inst.to_caller_order(&self.report.plan.p_n)
    }

    #[getter]
    fn p_c(&self) -> Vec<f64> {
        self.inst.to_caller_order(&self.report.plan.p_c)
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inst.to_caller_order(&self.report.energies(&self.inst))
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.iterations
    }

    #[getter]
    fn bound_gap(&self) -> f64 {
        self.report.bound_gap
    }

    /// `(name, passed, residual)` for every optimality check attached.
    #[getter]
    fn diagnostics(&self) -> Vec<(String, bool, f64)> {
        self.report
            .diagnostics
            .iter()
            .map(|d| (d.name.clone(), d.passed, d.residual))
            .collect()
    }

    /// Constraint violations of the stored plan, `(constraint, uav, residual)`.
    fn validate(&self) -> Vec<(String, Option<usize>, f64)> {
        coopsense::validate_solution(&self.inst, &self.report.allocation, &self.report.plan)
            .into_iter()
            .map(|v| (v.constraint, v.uav, v.residual))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        let file = coopsense::SolutionFile {
            instance: self.inst.clone(),
            report: self.report.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| to_py(e.into()))
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(scheme={:?}, total_t={}, omega={:?})",
            self.report.scheme,
            self.report.total_t(),
            self.omega()
        )
    }
}

fn wrap(inst: &PyInstance, report: coopsense::SolveReport) -> PyReport {
    PyReport {
        inst: inst.0.clone(),
        report,
    }
}

/// Proposed scheme: routes by the overlap necessity test.
#[pyfunction]
#[pyo3(signature = (inst, epsilon = 1e-3))]
fn solve_auto(py: Python<'_>, inst: &PyInstance, epsilon: f64) -> PyResult<PyReport> {
    let r = py
        .allow_threads(|| harness::solve_auto(&inst.0, epsilon))
        .map_err(to_py)?;
    Ok(wrap(inst, r))
}

/// Global search over allocations, with or without a common task.
#[pyfunction]
#[pyo3(signature = (inst, epsilon = 1e-3))]
fn solve_polyblock(py: Python<'_>, inst: &PyInstance, epsilon: f64) -> PyResult<PyReport> {
    let r = py
        .allow_threads(|| polyblock::solve_polyblock(&inst.0, epsilon))
        .map_err(to_py)?;
    Ok(wrap(inst, r))
}

/// Optimal allocation with no common task.
#[pyfunction]
fn solve_degenerate(py: Python<'_>, inst: &PyInstance) -> PyResult<PyReport> {
    let r = py
        .allow_threads(|| degenerate::solve_degenerate(&inst.0))
        .map_err(to_py)?;
    Ok(wrap(inst, r))
}

/// One of `uta_wc`, `uta_c`, `full_c`, `opt_wc`.
#[pyfunction]
fn solve_baseline(py: Python<'_>, inst: &PyInstance, name: &str) -> PyResult<PyReport> {
    let b: Baseline = name.parse().map_err(to_py)?;
    let r = py.allow_threads(|| b.solve(&inst.0)).map_err(to_py)?;
    Ok(wrap(inst, r))
}

/// `(total_t, t_c, t_n, p_n, p_c)`.
type InnerTuple = (f64, f64, Vec<f64>, Vec<f64>, Vec<f64>);

/// Optimal powers and per-bit times for a fixed allocation; per-UAV lists
/// are in ascending-gain order.
#[pyfunction]
fn solve_inner(inst: &PyInstance, alloc: &PyAllocation) -> PyResult<InnerTuple> {
    let s = inner::solve_inner(&inst.0, &alloc.0).map_err(to_py)?;
    Ok((s.objective_t, s.plan.t_c, s.plan.t_n, s.plan.p_n, s.plan.p_c))
}

/// `(x_star, threshold, overlap_possible)`.
#[pyfunction]
fn necessity_check(inst: &PyInstance) -> (f64, f64, bool) {
    let v = analysis::necessity_check(&inst.0);
    (v.x_star, v.threshold, v.overlap_possible)
}

/// Exhaustive search on a simplex grid; returns `(omega, total_t, points)`.
#[pyfunction]
fn brute_force_oracle(py: Python<'_>, inst: &PyInstance, grid_step: f64) -> PyResult<(Vec<f64>, f64, usize)> {
    let o = py
        .allow_threads(|| harness::brute_force_oracle(&inst.0, grid_step))
        .map_err(to_py)?;
    Ok((o.omega, o.total_t, o.points))
}

/// Runs a sweep and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (inst, param, values = None, epsilon = 1e-3))]
fn sweep_csv(
    py: Python<'_>,
    inst: &PyInstance,
    param: &str,
    values: Option<Vec<f64>>,
    epsilon: f64,
) -> PyResult<String> {
    let param: SweepParam = param.parse().map_err(to_py)?;
    let mut spec = SweepSpec::default_grid(param);
    if let Some(v) = values {
        spec.values = v;
    }
    let rows = py
        .allow_threads(|| harness::run_sweep(&spec, &inst.0, epsilon))
        .map_err(to_py)?
        .rows;
    let mut buf = Vec::new();
    harness::write_csv(&rows, &mut buf).map_err(to_py)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn coopsense_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyAllocation>()?;
    m.add_class::<PyReport>()?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add_function(wrap_pyfunction!(solve_auto, m)?)?;
    m.add_function(wrap_pyfunction!(solve_polyblock, m)?)?;
    m.add_function(wrap_pyfunction!(solve_degenerate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(solve_inner, m)?)?;
    m.add_function(wrap_pyfunction!(necessity_check, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}
