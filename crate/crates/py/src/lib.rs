//! Python bindings: meshes, the time stepper, convergence studies and the
//! energy experiment.

use std::sync::Arc;

use mhd_core::assembly::PhysParams;
use mhd_core::harness::{self, ConvergenceTable, EnergyRow, InitialVortex, ManufacturedSolution};
use mhd_core::mesh::Mesh;
use mhd_core::scheme::{self, Fields, Forcing, NoForcing, StepOptions, StepReport, Startup, ZeroFields};
use mhd_core::MhdError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: MhdError) -> PyErr {
    match e {
        MhdError::Config(_) | MhdError::InvalidResolution(_) | MhdError::Dimension(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn params(mu: f64, sigma: f64, nu: f64) -> PhysParams {
    PhysParams { mu, sigma, nu }
}

/// Uniform triangulation of the unit square.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: Arc<Mesh>,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(m: usize) -> PyResult<Self> {
        Ok(PyMesh { inner: Arc::new(Mesh::uniform(m).map_err(py_err)?) })
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.resolution()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|v| (v[0], v[1])).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles().iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(m={})", self.inner.resolution())
    }
}

/// Two consecutive time levels plus the pressure and intermediate velocity.
/// Field values are full coefficient vectors, constrained entries included.
#[pyclass(name = "State", frozen)]
struct PyState {
    inner: scheme::State,
}

#[pymethods]
impl PyState {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u.values().to_vec()
    }

    #[getter]
    fn u_prev(&self) -> Vec<f64> {
        self.inner.u_prev.values().to_vec()
    }

    #[getter]
    fn h(&self) -> Vec<f64> {
        self.inner.h.values().to_vec()
    }

    #[getter]
    fn h_prev(&self) -> Vec<f64> {
        self.inner.h_prev.values().to_vec()
    }

    #[getter]
    fn p(&self) -> Vec<f64> {
        self.inner.p.values().to_vec()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn __repr__(&self) -> String {
        format!("State(n={})", self.inner.n)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Problem {
    Mms,
    Vortex,
    Zero,
}

impl Problem {
    fn parse(s: &str) -> PyResult<Self> {
        match s {
            "mms" => Ok(Problem::Mms),
            "vortex" => Ok(Problem::Vortex),
            "zero" => Ok(Problem::Zero),
            _ => Err(PyValueError::new_err(format!("unknown problem {s:?}; expected mms, vortex or zero"))),
        }
    }
}

fn report_dict<'py>(py: Python<'py>, r: &StepReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("step", r.step)?;
    d.set_item("t", r.t)?;
    d.set_item("energy", r.energy)?;
    d.set_item("div_residual", r.div_residual)?;
    d.set_item("equiv_residual", r.equiv_residual)?;
    Ok(d)
}

/// Assembled forms and factorizations for one mesh, step size and set of
/// coefficients.
#[pyclass(name = "Stepper", frozen)]
struct PyStepper {
    inner: scheme::Stepper,
    mms: ManufacturedSolution,
}

impl PyStepper {
    fn fields(&self, p: Problem) -> &dyn Fields {
        match p {
            Problem::Mms => &self.mms,
            Problem::Vortex => &InitialVortex,
            Problem::Zero => &ZeroFields,
        }
    }

    fn forcing(&self, p: Problem) -> &dyn Forcing {
        match p {
            Problem::Mms => &self.mms,
            _ => &NoForcing,
        }
    }
}

#[pymethods]
impl PyStepper {
    #[new]
    #[pyo3(signature = (mesh, tau, mu=1.0, sigma=1.0, nu=1.0, coupling=true))]
    fn new(py: Python<'_>, mesh: &PyMesh, tau: f64, mu: f64, sigma: f64, nu: f64, coupling: bool) -> PyResult<Self> {
        let p = params(mu, sigma, nu);
        let opts = StepOptions { coupling, ..StepOptions::default() };
        let mesh = mesh.inner.clone();
        let inner = py.detach(|| scheme::Stepper::new(mesh, p, tau, opts)).map_err(py_err)?;
        Ok(PyStepper { inner, mms: ManufacturedSolution::new(p) })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    /// Free unknown counts `(H, u, p)`.
    fn sizes(&self) -> (usize, usize, usize) {
        self.inner.sizes()
    }

    /// Level-0 interpolant of the initial data of `problem`.
    fn initial_state(&self, problem: &str) -> PyResult<PyState> {
        let p = Problem::parse(problem)?;
        Ok(PyState { inner: self.inner.initial_state(self.fields(p)) })
    }

    /// Levels 0 and 1: exact interpolants for `mms`, a backward-Euler
    /// bootstrap step otherwise.
    fn startup<'py>(&self, py: Python<'py>, problem: &str) -> PyResult<(PyState, Bound<'py, PyDict>)> {
        let p = Problem::parse(problem)?;
        let mode = if p == Problem::Mms { Startup::ExactFields } else { Startup::Bootstrap };
        let (s, r) = py
            .detach(|| self.inner.startup(self.fields(p), self.forcing(p), mode))
            .map_err(py_err)?;
        Ok((PyState { inner: s }, report_dict(py, &r)?))
    }

    fn step<'py>(&self, py: Python<'py>, state: &PyState, problem: &str) -> PyResult<(PyState, Bound<'py, PyDict>)> {
        let p = Problem::parse(problem)?;
        let (s, r) = py.detach(|| self.inner.step(&state.inner, self.forcing(p))).map_err(py_err)?;
        Ok((PyState { inner: s }, report_dict(py, &r)?))
    }

    /// Advances `steps` steps and returns the final state and the reports.
    fn run<'py>(
        &self,
        py: Python<'py>,
        state: &PyState,
        problem: &str,
        steps: usize,
    ) -> PyResult<(PyState, Vec<Bound<'py, PyDict>>)> {
        let p = Problem::parse(problem)?;
        let mut reports = Vec::new();
        let s = py
            .detach(|| self.inner.run(state.inner.clone(), self.forcing(p), steps, |_, r| reports.push(r.clone())))
            .map_err(py_err)?;
        let dicts = reports.iter().map(|r| report_dict(py, r)).collect::<PyResult<_>>()?;
        Ok((PyState { inner: s }, dicts))
    }

    fn energy(&self, state: &PyState) -> PyResult<f64> {
        self.inner.energy(&state.inner).map_err(py_err)
    }

    /// L² errors `(u, H)` against the manufactured solution at time `t`.
    fn mms_errors(&self, state: &PyState, t: f64) -> (f64, f64) {
        let f = self.inner.forms();
        let eu = harness::l2_error(&f.velocity, &state.inner.u, |x, y| self.mms.velocity(t, x, y));
        let eh = harness::l2_error(&f.magnetic, &state.inner.h, |x, y| Fields::magnetic(&self.mms, t, x, y));
        (eu, eh)
    }
}

fn table_rows<'py>(py: Python<'py>, t: &ConvergenceTable) -> PyResult<Vec<Bound<'py, PyDict>>> {
    t.rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("resolution", r.resolution)?;
            d.set_item("err_u", r.err_u)?;
            d.set_item("order_u", r.order_u)?;
            d.set_item("err_h", r.err_h)?;
            d.set_item("order_h", r.order_h)?;
            Ok(d)
        })
        .collect()
}

fn energy_rows<'py>(py: Python<'py>, rows: &[EnergyRow]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("step", r.step)?;
            d.set_item("t", r.t)?;
            d.set_item("energy", r.energy)?;
            d.set_item("div_residual", r.div_residual)?;
            d.set_item("equiv_residual", r.equiv_residual)?;
            Ok(d)
        })
        .collect()
}

/// Manufactured-solution errors on a fixed mesh for each step count.
#[pyfunction]
#[pyo3(signature = (m, t_final, steps, mu=1.0, sigma=1.0, nu=1.0))]
fn temporal_study<'py>(
    py: Python<'py>,
    m: usize,
    t_final: f64,
    steps: Vec<usize>,
    mu: f64,
    sigma: f64,
    nu: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let t = py
        .detach(|| harness::run_temporal_study(m, t_final, &steps, params(mu, sigma, nu), StepOptions::default()))
        .map_err(py_err)?;
    table_rows(py, &t)
}

/// Manufactured-solution errors at a fixed step for each mesh resolution.
#[pyfunction]
#[pyo3(signature = (tau, t_final, resolutions, mu=1.0, sigma=1.0, nu=1.0))]
fn spatial_study<'py>(
    py: Python<'py>,
    tau: f64,
    t_final: f64,
    resolutions: Vec<usize>,
    mu: f64,
    sigma: f64,
    nu: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let t = py
        .detach(|| harness::run_spatial_study(tau, t_final, &resolutions, params(mu, sigma, nu), StepOptions::default()))
        .map_err(py_err)?;
    table_rows(py, &t)
}

/// Unforced decay from the vortex initial data; one row per time level.
#[pyfunction]
#[pyo3(signature = (m, tau, steps, mu=1.0, sigma=1.0, nu=1.0))]
fn energy_study<'py>(
    py: Python<'py>,
    m: usize,
    tau: f64,
    steps: usize,
    mu: f64,
    sigma: f64,
    nu: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let s = py
        .detach(|| harness::run_energy_study(m, tau, steps, params(mu, sigma, nu), StepOptions::default()))
        .map_err(py_err)?;
    energy_rows(py, &s.rows)
}

/// Relative residual of the three-level identity in the Euclidean norm.
#[pyfunction]
fn cn_identity_check(a_next: Vec<f64>, a: Vec<f64>, a_prev: Vec<f64>) -> PyResult<f64> {
    if a.len() != a_next.len() || a.len() != a_prev.len() {
        return Err(PyValueError::new_err("vectors must have equal length"));
    }
    Ok(scheme::cn_identity_check(&a_next, &a, &a_prev, None))
}

/// Manufactured sources `(g, f)` at `(t, x, y)`.
#[pyfunction]
#[pyo3(signature = (t, x, y, mu=1.0, sigma=1.0, nu=1.0))]
fn mms_sources(t: f64, x: f64, y: f64, mu: f64, sigma: f64, nu: f64) -> ((f64, f64), (f64, f64)) {
    let m = ManufacturedSolution::new(params(mu, sigma, nu));
    let (g, f) = (m.g(t, x, y), m.f(t, x, y));
    ((g[0], g[1]), (f[0], f[1]))
}

#[pymodule]
fn mhd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyStepper>()?;
    m.add_function(wrap_pyfunction!(temporal_study, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_study, m)?)?;
    m.add_function(wrap_pyfunction!(energy_study, m)?)?;
    m.add_function(wrap_pyfunction!(cn_identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(mms_sources, m)?)?;
    Ok(())
}
