//! Python module `pyrliff`.
//!
//! Configurations are passed as the same `key = value` text the CLI reads;
//! reports come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use rliff::config::parse_config;
use rliff::csvio::trajectory_to_string;
use rliff::{ActionId, Error, ExperimentConfig, Scenario, SyncedEstimates, Trajectory};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Serialize(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn config(text: Option<&str>) -> PyResult<ExperimentConfig> {
    parse_config(text.unwrap_or(""), "<config>").map_err(err)
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Position2D", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyPosition(rliff::Position2D);

#[pymethods]
impl PyPosition {
    #[new]
    fn new(x: f64, y: f64) -> PyResult<Self> {
        rliff::Position2D::new(x, y).map(Self).map_err(err)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x()
    }

    #[getter]
    fn y(&self) -> f64 {
        self.0.y()
    }

    fn distance(&self, other: &PyPosition) -> f64 {
        self.0.distance(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("Position2D({}, {})", self.0.x(), self.0.y())
    }
}

#[pyclass(name = "WeightVector", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyWeights(rliff::WeightVector);

#[pymethods]
impl PyWeights {
    /// `w_pdr` is derived as `1 - w_rssi - w_aoa`.
    #[new]
    fn new(w_rssi: f64, w_aoa: f64) -> PyResult<Self> {
        rliff::WeightVector::new(w_rssi, w_aoa).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_triple(w_rssi: f64, w_pdr: f64, w_aoa: f64) -> PyResult<Self> {
        rliff::WeightVector::from_triple(w_rssi, w_pdr, w_aoa).map(Self).map_err(err)
    }

    #[staticmethod]
    fn equal() -> Self {
        Self(rliff::WeightVector::equal())
    }

    #[getter]
    fn rssi(&self) -> f64 {
        self.0.rssi()
    }

    #[getter]
    fn pdr(&self) -> f64 {
        self.0.pdr()
    }

    #[getter]
    fn aoa(&self) -> f64 {
        self.0.aoa()
    }

    fn __repr__(&self) -> String {
        format!("WeightVector(rssi={}, pdr={}, aoa={})", self.0.rssi(), self.0.pdr(), self.0.aoa())
    }
}

/// A synchronized walk: truth plus the three tracker paths.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory(Trajectory);

#[pymethods]
impl PyTrajectory {
    /// Builds a trajectory from equal-length lists of `(x, y)` pairs.
    #[new]
    #[pyo3(signature = (truth, rssi, pdr, aoa, env_id = "custom", scenario = "random"))]
    fn new(
        truth: Vec<(f64, f64)>,
        rssi: Vec<(f64, f64)>,
        pdr: Vec<(f64, f64)>,
        aoa: Vec<(f64, f64)>,
        env_id: &str,
        scenario: &str,
    ) -> PyResult<Self> {
        let n = truth.len();
        if [rssi.len(), pdr.len(), aoa.len()].iter().any(|&m| m != n) {
            return Err(PyValueError::new_err("all four paths must have the same length"));
        }
        let p = |(x, y): (f64, f64)| rliff::Position2D::new(x, y).map_err(err);
        let mut records = Vec::with_capacity(n);
        for k in 0..n {
            records.push(SyncedEstimates {
                t: k as u64,
                truth: p(truth[k])?,
                rssi: p(rssi[k])?,
                pdr: p(pdr[k])?,
                aoa: p(aoa[k])?,
            });
        }
        let scenario: Scenario = scenario.parse().map_err(err)?;
        Trajectory::new(env_id, scenario, records).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `[(truth, rssi, pdr, aoa), ...]` with each position an `(x, y)` tuple.
    fn records(&self) -> Vec<[(f64, f64); 4]> {
        self.0
            .records()
            .iter()
            .map(|r| [r.truth.into(), r.rssi.into(), r.pdr.into(), r.aoa.into()])
            .collect()
    }

    fn to_csv(&self) -> String {
        trajectory_to_string(&self.0)
    }
}

fn estimates(rssi: PyPosition, pdr: PyPosition, aoa: PyPosition, truth: PyPosition) -> SyncedEstimates {
    SyncedEstimates {
        t: 0,
        truth: truth.0,
        rssi: rssi.0,
        pdr: pdr.0,
        aoa: aoa.0,
    }
}

#[pyfunction]
fn fuse(rssi: PyPosition, pdr: PyPosition, aoa: PyPosition, weights: PyWeights) -> PyPosition {
    PyPosition(rliff::fuse(&estimates(rssi, pdr, aoa, rssi), &weights.0))
}

#[pyfunction]
fn tracking_error(
    truth: PyPosition,
    rssi: PyPosition,
    pdr: PyPosition,
    aoa: PyPosition,
    weights: PyWeights,
) -> f64 {
    rliff::tracking_error(&estimates(rssi, pdr, aoa, truth), &weights.0)
}

#[pyfunction]
fn discretize_state(epsilon: f64) -> PyResult<usize> {
    rliff::discretize_state(epsilon).map_err(err)
}

#[pyfunction]
fn reward(epsilon: f64) -> PyResult<i32> {
    rliff::reward(epsilon).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (weights, action, step_pct = 0.1))]
fn apply_action(weights: PyWeights, action: u8, step_pct: f64) -> PyResult<PyWeights> {
    let a = ActionId::new(action).map_err(err)?;
    Ok(PyWeights(rliff::apply_action(&weights.0, a, step_pct)))
}

#[pyfunction]
fn evaluate(trajectory: &PyTrajectory, weights: PyWeights) -> f64 {
    rliff::evaluate(&trajectory.0, &weights.0)
}

/// Trains on `trajectory`; returns `(weights, report_dict)`.
#[pyfunction]
#[pyo3(signature = (trajectory, config = None))]
fn train<'py>(
    py: Python<'py>,
    trajectory: &PyTrajectory,
    config: Option<&str>,
) -> PyResult<(PyWeights, Bound<'py, PyAny>)> {
    let cfg = self::config(config)?;
    let out = py.detach(|| rliff::train(&trajectory.0, &cfg.learning)).map_err(err)?;
    Ok((PyWeights(out.weights), to_py(py, &out.report)?))
}

/// Ground-truth walk as a list of `(x, y)`.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn generate_trajectory(config: Option<&str>) -> PyResult<Vec<(f64, f64)>> {
    let cfg = self::config(config)?;
    let pts = rliff::generate_trajectory(&cfg.env, cfg.scenario, cfg.seed).map_err(err)?;
    Ok(pts.into_iter().map(Into::into).collect())
}

fn tracker(
    truth: Vec<(f64, f64)>,
    config: Option<&str>,
    f: fn(&[rliff::Position2D], &rliff::TrackerNoiseConfig) -> rliff::Result<Vec<rliff::Position2D>>,
) -> PyResult<Vec<(f64, f64)>> {
    let cfg = self::config(config)?;
    let truth = truth
        .into_iter()
        .map(|(x, y)| rliff::Position2D::new(x, y))
        .collect::<rliff::Result<Vec<_>>>()
        .map_err(err)?;
    let path = f(&truth, &cfg.noise).map_err(err)?;
    Ok(path.into_iter().map(Into::into).collect())
}

#[pyfunction]
#[pyo3(signature = (truth, config = None))]
fn simulate_rssi_path(truth: Vec<(f64, f64)>, config: Option<&str>) -> PyResult<Vec<(f64, f64)>> {
    tracker(truth, config, rliff::simulate_rssi_path)
}

#[pyfunction]
#[pyo3(signature = (truth, config = None))]
fn simulate_pdr_path(truth: Vec<(f64, f64)>, config: Option<&str>) -> PyResult<Vec<(f64, f64)>> {
    tracker(truth, config, rliff::simulate_pdr_path)
}

#[pyfunction]
#[pyo3(signature = (truth, config = None))]
fn simulate_aoa_path(truth: Vec<(f64, f64)>, config: Option<&str>) -> PyResult<Vec<(f64, f64)>> {
    tracker(truth, config, rliff::simulate_aoa_path)
}

/// Walk plus all three tracker paths, as the `simulate` command produces it.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn simulate(config: Option<&str>) -> PyResult<PyTrajectory> {
    let cfg = self::config(config)?;
    rliff::simulate_trajectory(&cfg.env, cfg.scenario, &cfg.noise)
        .map(PyTrajectory)
        .map_err(err)
}

/// One simulate-and-evaluate cell; a list of per-method report dicts.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn run_experiment<'py>(py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::config(config)?;
    let reports = py.detach(|| rliff::run_experiment(&cfg)).map_err(err)?;
    to_py(py, &reports)
}

#[pymodule]
fn pyrliff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPosition>()?;
    m.add_class::<PyWeights>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(tracking_error, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_state, m)?)?;
    m.add_function(wrap_pyfunction!(reward, m)?)?;
    m.add_function(wrap_pyfunction!(apply_action, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(generate_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_rssi_path, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pdr_path, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_aoa_path, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
