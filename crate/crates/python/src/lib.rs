//! Python bindings for `helical-core`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use helical_core::config::RunConfig;
use helical_core::energy::{self, BoundarySample, VolumeSample};
use helical_core::reduction::{self, Dimension, HelicalConfig, Sign};
use helical_core::solver::solve_full;
use helical_core::suites;
use helical_core::Error;

create_exception!(helical, HelicalError, PyException);
create_exception!(helical, IncompatibleDataError, HelicalError);
create_exception!(helical, SingularSystemError, HelicalError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::IncompatibleData { .. } => IncompatibleDataError::new_err(e.to_string()),
        Error::SingularSystem { .. } => SingularSystemError::new_err(e.to_string()),
        _ => HelicalError::new_err(e.to_string()),
    }
}

fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn helical_config(dimension: usize, omega: f64, radius: f64) -> PyResult<HelicalConfig> {
    let dim = Dimension::from_usize(dimension).map_err(to_py)?;
    HelicalConfig::new(dim, omega, radius, Sign::Plus).map_err(to_py)
}

/// Run configuration, read from or written to TOML.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new(dimension: usize, omega: f64, radius: f64, resolution: Vec<usize>) -> PyResult<Self> {
        let inner = RunConfig::new(dimension, omega, radius, resolution);
        inner.helical().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: RunConfig::parse(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: RunConfig::load(&path).map_err(to_py)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn n_phi(&self) -> usize {
        self.inner.n_phi
    }

    #[setter]
    fn set_n_phi(&mut self, v: usize) {
        self.inner.n_phi = v;
    }

    #[getter]
    fn m_max(&self) -> usize {
        self.inner.m_max
    }

    #[setter]
    fn set_m_max(&mut self, v: usize) {
        self.inner.m_max = v;
    }

    #[getter]
    fn refine(&self) -> usize {
        self.inner.refine
    }

    #[setter]
    fn set_refine(&mut self, v: usize) {
        self.inner.refine = v;
    }

    #[getter]
    fn resolution(&self) -> Vec<usize> {
        self.inner.resolution.clone()
    }

    /// `(r, θ)` of every grid node, node-major.
    fn nodes(&self) -> PyResult<Vec<(f64, f64)>> {
        let g = self.inner.grid().map_err(to_py)?;
        Ok((0..g.node_count())
            .map(|i| {
                let (j, k) = g.split(i);
                (g.r(j), g.theta(k))
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(dimension={}, omega={}, radius={}, resolution={:?})",
            self.inner.dimension, self.inner.omega, self.inner.radius, self.inner.resolution
        )
    }
}

/// Solve the configured problem. Returns `(field, report)` where `field` is
/// node-major with `n_phi` angles per node.
#[pyfunction]
fn solve<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<(Vec<f64>, Bound<'py, PyAny>)> {
    let run = &config.inner;
    let problem = run.problem().map_err(to_py)?;
    let outcome = py.detach(|| solve_full(&problem, &run.solve_options()));
    let field = outcome.field.map_err(to_py)?;
    let report = serde_json::to_string(&outcome.report).expect("report serializes");
    Ok((field, loads(py, &report)?))
}

/// Run one verification suite and return its report as a dict.
#[pyfunction]
fn verify<'py>(py: Python<'py>, config: &PyConfig, suite: &str) -> PyResult<Bound<'py, PyAny>> {
    let run = &config.inner;
    let report = py.detach(|| suites::run_suite(suite, run)).map_err(to_py)?;
    loads(py, &report.to_json())
}

/// Manufactured-solution refinement table as a dict.
#[pyfunction]
fn convergence<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let run = &config.inner;
    let report = py.detach(|| suites::convergence_table(run)).map_err(to_py)?;
    loads(py, &serde_json::to_string(&report).expect("report serializes"))
}

#[pyfunction]
fn chi(rho: f64, omega: f64) -> PyResult<f64> {
    reduction::chi(rho, &helical_config(2, omega, 1.0)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rho, u_rho, u_phi, u_z, omega))]
fn volume_integrand(rho: f64, u_rho: f64, u_phi: f64, u_z: Vec<f64>, omega: f64) -> PyResult<f64> {
    let cfg = helical_config(u_z.len() + 2, omega, 1.0)?;
    energy::proof_volume_integrand(&VolumeSample { rho, u_rho, u_phi, u_z }, &cfg).map_err(to_py)
}

/// `(integrand, lower_bound)` at a boundary point.
#[pyfunction]
#[pyo3(signature = (rho, z, u_z, u_phi, omega))]
fn boundary_integrand(rho: f64, z: Vec<f64>, u_z: Vec<f64>, u_phi: f64, omega: f64) -> PyResult<(f64, f64)> {
    let radius = (rho * rho + z.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let cfg = helical_config(3, omega, radius)?;
    energy::proof_boundary_integrand(&BoundarySample { rho, z, u_z, u_phi }, &cfg).map_err(to_py)
}

#[pymodule]
fn helical(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("HelicalError", py.get_type::<HelicalError>())?;
    m.add("IncompatibleDataError", py.get_type::<IncompatibleDataError>())?;
    m.add("SingularSystemError", py.get_type::<SingularSystemError>())?;
    m.add("SUITES", suites::SUITE_NAMES.to_vec())?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(chi, m)?)?;
    m.add_function(wrap_pyfunction!(volume_integrand, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_integrand, m)?)?;
    Ok(())
}
