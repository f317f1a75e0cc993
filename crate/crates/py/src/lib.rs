//! Python bindings: case loading, power flow, the datacenter profile
//! pipeline, single transients and paired comparisons.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use engine::datacenter::{
    self as dc, build_profile, build_profile_for_peak, synthetic_week_trace, AmbientConditions, ChillerParams,
    ItPowerParams, LoadProfile,
};
use engine::dynamics::SimConfig;
use engine::grid::{build_ybus, parse_case, CaseFormat, NetworkCase};
use engine::powerflow::{self as pf, PowerFlowOptions};
use engine::scenario::{
    compare, extract_metrics, random_contingencies, run_events, CompareOptions, ConfigKind, Configuration,
    ContingencySpec, Snapshot, SnapshotSelection,
};

fn err(e: engine::Error) -> PyErr {
    match e {
        engine::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A validated transmission network.
#[pyclass(name = "Case", frozen)]
struct PyCase {
    inner: NetworkCase,
}

#[pymethods]
impl PyCase {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let fmt = CaseFormat::from_path(&path).map_err(err)?;
        Ok(PyCase { inner: parse_case(&path, fmt).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCase { inner: NetworkCase::from_json_str(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(err)
    }

    #[getter]
    fn n_bus(&self) -> usize {
        self.inner.n_bus()
    }

    #[getter]
    fn bus_ids(&self) -> Vec<u32> {
        self.inner.buses().iter().map(|b| b.id).collect()
    }

    #[getter]
    fn system_mva_base(&self) -> f64 {
        self.inner.system_mva_base
    }

    fn __repr__(&self) -> String {
        format!(
            "Case(n_bus={}, n_branch={}, n_gen={})",
            self.inner.n_bus(),
            self.inner.branches().len(),
            self.inner.generators().len()
        )
    }
}

#[pyclass(name = "PowerFlowResult", frozen, get_all)]
struct PyPowerFlow {
    converged: bool,
    iterations: usize,
    bus_ids: Vec<u32>,
    v_mag: Vec<f64>,
    v_ang_deg: Vec<f64>,
    p_inj_pu: Vec<f64>,
    q_inj_pu: Vec<f64>,
    slack_p_mw: f64,
    slack_q_mvar: f64,
    losses_mw: f64,
}

#[pyfunction]
#[pyo3(signature = (case, tol=1e-8, max_iter=20, flat_start=false, enforce_q_limits=true))]
fn solve_powerflow(
    py: Python<'_>,
    case: &PyCase,
    tol: f64,
    max_iter: usize,
    flat_start: bool,
    enforce_q_limits: bool,
) -> PyResult<PyPowerFlow> {
    let opts = PowerFlowOptions { tol, max_iter, flat_start, enforce_q_limits };
    let c = &case.inner;
    let sol = py.detach(|| pf::solve(c, &build_ybus(c), &opts)).map_err(err)?;
    let base = c.system_mva_base;
    Ok(PyPowerFlow {
        converged: sol.converged,
        iterations: sol.iterations,
        bus_ids: sol.bus_ids.clone(),
        v_mag: (0..sol.v.len()).map(|i| sol.v_mag(i)).collect(),
        v_ang_deg: (0..sol.v.len()).map(|i| sol.v_ang(i).to_degrees()).collect(),
        p_inj_pu: sol.p_inj.clone(),
        q_inj_pu: sol.q_inj.clone(),
        slack_p_mw: sol.slack_p * base,
        slack_q_mvar: sol.slack_q * base,
        losses_mw: pf::total_losses(c, &sol.v).re * base,
    })
}

/// Five-minute datacenter demand profile.
#[pyclass(name = "Profile", frozen)]
struct PyProfile {
    inner: LoadProfile,
}

fn fit(trace: &dc::UtilizationTrace, peak_total_mw: Option<f64>) -> engine::Result<LoadProfile> {
    let (it, ch, amb) = (ItPowerParams::default(), ChillerParams::default(), [AmbientConditions::default()]);
    match peak_total_mw {
        Some(target) => build_profile_for_peak(trace, &it, &ch, &amb, target).map(|(_, p)| p),
        None => build_profile(trace, &it, &ch, &amb),
    }
}

#[pymethods]
impl PyProfile {
    /// Seeded synthetic week of cluster activity.
    #[staticmethod]
    #[pyo3(signature = (seed=42, n_machines=400, peak_total_mw=Some(60.0)))]
    fn synthetic(seed: u64, n_machines: usize, peak_total_mw: Option<f64>) -> PyResult<Self> {
        let (tasks, events) = synthetic_week_trace(seed, n_machines);
        let t1 = dc::BINS_PER_WEEK as f64 * dc::BIN_SECONDS;
        let trace = dc::utilization(&tasks, &events, 0.0, t1).map_err(err)?;
        Ok(PyProfile { inner: fit(&trace, peak_total_mw).map_err(err)? })
    }

    /// Task and machine-event CSV traces over `[t0, t1)` seconds.
    #[staticmethod]
    #[pyo3(signature = (tasks, machine_events, t0, t1, peak_total_mw=None))]
    fn from_traces(
        tasks: PathBuf,
        machine_events: PathBuf,
        t0: f64,
        t1: f64,
        peak_total_mw: Option<f64>,
    ) -> PyResult<Self> {
        let tasks = dc::load_tasks(&tasks).map_err(err)?;
        let events = dc::load_machine_events(&machine_events).map_err(err)?;
        let trace = dc::utilization(&tasks, &events, t0, t1).map_err(err)?;
        Ok(PyProfile { inner: fit(&trace, peak_total_mw).map_err(err)? })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        let f = std::fs::File::open(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Ok(PyProfile { inner: LoadProfile::read_csv(f, &path.display().to_string()).map_err(err)? })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        self.inner.write_csv(f).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn timestamps(&self) -> Vec<f64> {
        self.inner.timestamps.clone()
    }

    #[getter]
    fn utilization(&self) -> Vec<f64> {
        self.inner.u.clone()
    }

    #[getter]
    fn p_it_mw(&self) -> Vec<f64> {
        self.inner.p_it.clone()
    }

    #[getter]
    fn p_thermal_mw(&self) -> Vec<f64> {
        self.inner.p_thermal.clone()
    }

    #[getter]
    fn n_chillers(&self) -> Vec<u32> {
        self.inner.n_ch.clone()
    }

    #[getter]
    fn p_total_mw(&self) -> Vec<f64> {
        self.inner.totals()
    }

    #[getter]
    fn peak_total_mw(&self) -> f64 {
        self.inner.peak_total()
    }
}

#[pyfunction]
#[pyo3(signature = (u, p_max=60.0, idle_fraction=0.5))]
fn it_power(u: f64, p_max: f64, idle_fraction: f64) -> PyResult<f64> {
    dc::it_power(u, &ItPowerParams { p_max, idle_fraction }).map_err(err)
}

fn parse_spec(text: Option<&str>, seed: u64) -> PyResult<ContingencySpec> {
    match text {
        Some(t) => serde_json::from_str(t).map_err(|e| PyValueError::new_err(format!("contingency: {e}"))),
        None => Ok(random_contingencies(1, seed, 3).remove(0)),
    }
}

fn base_config(dc_bus: u32, with_ies: bool) -> Configuration {
    let c = Configuration::with_ies(dc_bus, Default::default());
    if with_ies {
        c
    } else {
        c.as_kind(ConfigKind::GridOnly)
    }
}

/// One transient at profile bin `snapshot`. `contingency` is a JSON
/// contingency spec; a seeded random one is drawn when omitted. Returns a
/// dict with the series, event log and metrics at the datacenter bus.
#[pyfunction]
#[pyo3(signature = (case, profile, snapshot, contingency=None, with_ies=true, dc_bus=25, t_end=15.0, dt=0.005, seed=42))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    case: &PyCase,
    profile: &PyProfile,
    snapshot: usize,
    contingency: Option<&str>,
    with_ies: bool,
    dc_bus: u32,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let spec = parse_spec(contingency, seed)?;
    let cfg = base_config(dc_bus, with_ies);
    let sim = SimConfig { dt, t_end, ..Default::default() };
    let (c, p) = (&case.inner, &profile.inner);
    let out = py
        .detach(|| -> engine::Result<_> {
            let snap = Snapshot::from_profile(p, snapshot)?;
            let events = spec.resolve(c, dc_bus)?;
            let run = run_events(c, &snap, &cfg, &events, &sim, &PowerFlowOptions::default())?;
            let metrics = extract_metrics(&run.result, dc_bus, spec.t_apply, &Default::default())?;
            Ok(serde_json::json!({
                "config": cfg.kind.label(),
                "snapshot": snap,
                "contingency": spec,
                "result": run.result,
                "metrics": metrics,
            }))
        })
        .map_err(err)?;
    to_py(py, &out)
}

/// Paired grid-only versus IES study. Returns the comparison report as a
/// dict.
#[pyfunction]
#[pyo3(signature = (case, profile, n_random=10, seed=42, hops=3, snapshots=None, dc_bus=25, t_end=15.0, jobs=0))]
#[allow(clippy::too_many_arguments)]
fn compare_configs(
    py: Python<'_>,
    case: &PyCase,
    profile: &PyProfile,
    n_random: usize,
    seed: u64,
    hops: usize,
    snapshots: Option<Vec<usize>>,
    dc_bus: u32,
    t_end: f64,
    jobs: usize,
) -> PyResult<Py<PyAny>> {
    let specs = random_contingencies(n_random, seed, hops);
    let cfg = base_config(dc_bus, true);
    let sim = SimConfig { t_end, ..Default::default() };
    let opts = CompareOptions {
        snapshots: match snapshots {
            Some(explicit) => SnapshotSelection { min_median_max: false, explicit },
            None => SnapshotSelection::default(),
        },
        jobs,
        ..Default::default()
    };
    let (c, p) = (&case.inner, &profile.inner);
    let report = py.detach(|| compare(c, p, &cfg, &specs, &sim, &opts)).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "smrgrid")]
fn smrgrid_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCase>()?;
    m.add_class::<PyPowerFlow>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(solve_powerflow, m)?)?;
    m.add_function(wrap_pyfunction!(it_power, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare_configs, m)?)?;
    Ok(())
}
