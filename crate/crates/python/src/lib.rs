//! Python bindings: density matrices, state tuples and the fidelity
//! functions, plus the property suites and reference reproductions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use multifid::bivariate::{self, EpsSchedule, ZParam};
use multifid::harness::{self, Reproduction};
use multifid::io::{StateTupleFile, Strictness};
use multifid::linalg::ComplexMatrix;
use multifid::measured::MeasuredOptions;
use multifid::multivariate::{self as mv, SdpForm, SecrecyForm};
use multifid::sdp::SolverOptions;
use multifid::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NumericalFailure { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn schedule(eps: Option<Vec<f64>>) -> PyResult<EpsSchedule> {
    eps.map_or_else(|| Ok(EpsSchedule::default()), |v| EpsSchedule::new(v).map_err(to_py))
}

fn solver(gap_tol: f64) -> PyResult<SolverOptions> {
    if !(gap_tol > 0.0) {
        return Err(PyValueError::new_err("gap_tol must be positive"));
    }
    Ok(SolverOptions::with_gap_tol(gap_tol))
}

/// A positive semidefinite, unit-trace matrix.
#[pyclass(name = "DensityMatrix", frozen, from_py_object)]
#[derive(Clone)]
struct PyDensityMatrix(multifid::DensityMatrix);

#[pymethods]
impl PyDensityMatrix {
    /// Build from a square nested list of complex (or real) entries. Small
    /// defects up to `repair_tol` are projected away; pass 0 to reject them.
    #[new]
    #[pyo3(signature = (rows, repair_tol = 1e-6))]
    fn new(rows: Vec<Vec<Complex64>>, repair_tol: f64) -> PyResult<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(PyValueError::new_err("matrix must be square and non-empty"));
        }
        let m = ComplexMatrix::from_fn(d, d, |i, j| rows[i][j]);
        let herm = multifid::HermitianMatrix::new(m).map_err(to_py)?;
        multifid::DensityMatrix::repaired(herm, repair_tol).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn pure(psi: Vec<Complex64>) -> PyResult<Self> {
        multifid::DensityMatrix::pure(&psi).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn diagonal(probs: Vec<f64>) -> PyResult<Self> {
        multifid::DensityMatrix::diagonal(&probs).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn maximally_mixed(d: usize) -> Self {
        Self(multifid::DensityMatrix::maximally_mixed(d))
    }

    #[staticmethod]
    #[pyo3(signature = (d, rank, seed = 0))]
    fn random(d: usize, rank: usize, seed: u64) -> PyResult<Self> {
        multifid::states::random_density(d, rank, seed).map(Self).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        self.0.eigenvalues().map_err(to_py)
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn kron(&self, other: &Self) -> PyResult<Self> {
        self.0.kron(&other.0).map(Self).map_err(to_py)
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.matrix();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dim={})", self.0.dim())
    }
}

/// An ordered tuple of density matrices of a common dimension.
#[pyclass(name = "StateTuple", frozen)]
struct PyStateTuple(multifid::StateTuple);

#[pymethods]
impl PyStateTuple {
    #[new]
    fn new(states: Vec<PyDensityMatrix>) -> PyResult<Self> {
        multifid::StateTuple::new(states.into_iter().map(|s| s.0).collect()).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_pure(vectors: Vec<Vec<Complex64>>) -> PyResult<Self> {
        multifid::StateTuple::from_pure(&vectors).map(Self).map_err(to_py)
    }

    /// Parse the JSON state-tuple file format.
    #[staticmethod]
    #[pyo3(signature = (text, strict = false))]
    fn from_json(text: &str, strict: bool) -> PyResult<Self> {
        let mode = if strict { Strictness::Strict } else { Strictness::Repair };
        multifid::io::read_tuple(text, mode).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        StateTupleFile::from_tuple(&self.0, None).to_canonical_string()
    }

    #[getter]
    fn r(&self) -> usize {
        self.0.r()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.r()
    }

    fn __getitem__(&self, i: usize) -> PyResult<PyDensityMatrix> {
        self.0.states().get(i).cloned().map(PyDensityMatrix).ok_or_else(|| PyValueError::new_err("index out of range"))
    }

    fn tensor_power(&self, n: usize) -> PyResult<Self> {
        self.0.tensor_power(n).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("StateTuple(r={}, dim={})", self.0.r(), self.0.dim())
    }
}

/// A fidelity value with the method that produced it and its certificate.
#[pyclass(name = "Fidelity", frozen)]
struct PyFidelity {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    method: String,
    certificate: String,
}

#[pymethods]
impl PyFidelity {
    #[getter]
    fn certificate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.certificate.as_str(),))
    }

    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!("Fidelity(value={}, method='{}')", self.value, self.method)
    }
}

impl From<mv::FidelityValue> for PyFidelity {
    fn from(v: mv::FidelityValue) -> Self {
        PyFidelity {
            value: v.value,
            method: v.method.to_string(),
            certificate: serde_json::to_string(&v.certificate).expect("serializable"),
        }
    }
}

fn wrap(r: multifid::Result<mv::FidelityValue>) -> PyResult<PyFidelity> {
    r.map(PyFidelity::from).map_err(to_py)
}

#[pyfunction]
fn uhlmann(rho: &PyDensityMatrix, sigma: &PyDensityMatrix) -> PyResult<f64> {
    bivariate::uhlmann(&rho.0, &sigma.0).map_err(to_py)
}

#[pyfunction]
fn holevo(rho: &PyDensityMatrix, sigma: &PyDensityMatrix) -> PyResult<f64> {
    bivariate::holevo(&rho.0, &sigma.0).map_err(to_py)
}

/// The z-fidelity; `z` is a number ≥ 1/2 or "flat".
#[pyfunction]
fn fid_z(rho: &PyDensityMatrix, sigma: &PyDensityMatrix, z: &Bound<'_, PyAny>) -> PyResult<f64> {
    let z = parse_z(z)?;
    bivariate::fid_z(&rho.0, &sigma.0, z).map_err(to_py)
}

fn parse_z(z: &Bound<'_, PyAny>) -> PyResult<ZParam> {
    let text = z.str()?.to_string();
    text.parse().map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (t, z = None))]
fn avg_pairwise(t: &PyStateTuple, z: Option<&Bound<'_, PyAny>>) -> PyResult<PyFidelity> {
    let z = z.map(parse_z).transpose()?.unwrap_or(ZParam::UHLMANN);
    wrap(mv::avg_pairwise_z(&t.0, z))
}

#[pyfunction]
#[pyo3(signature = (t, form = "kstar", gap_tol = 1e-9))]
fn f_sdp(t: &PyStateTuple, form: &str, gap_tol: f64) -> PyResult<PyFidelity> {
    let form: SdpForm = form.parse().map_err(to_py)?;
    wrap(mv::f_sdp(&t.0, form, &solver(gap_tol)?))
}

#[pyfunction]
#[pyo3(signature = (t, form = "kform", gap_tol = 1e-9))]
fn f_secrecy(t: &PyStateTuple, form: &str, gap_tol: f64) -> PyResult<PyFidelity> {
    let form: SecrecyForm = form.parse().map_err(to_py)?;
    wrap(mv::f_secrecy(&t.0, form, &solver(gap_tol)?))
}

#[pyfunction]
#[pyo3(signature = (t, gap_tol = 1e-9))]
fn f_geometric_sdp(t: &PyStateTuple, gap_tol: f64) -> PyResult<PyFidelity> {
    wrap(mv::f_geometric_sdp(&t.0, &solver(gap_tol)?))
}

#[pyfunction]
#[pyo3(signature = (t, eps_schedule = None))]
fn f_log_euclidean(t: &PyStateTuple, eps_schedule: Option<Vec<f64>>) -> PyResult<PyFidelity> {
    wrap(mv::f_log_euclidean(&t.0, &schedule(eps_schedule)?))
}

#[pyfunction]
#[pyo3(signature = (t, k, eps_schedule = None))]
fn avg_kwise_log_euclidean(t: &PyStateTuple, k: usize, eps_schedule: Option<Vec<f64>>) -> PyResult<PyFidelity> {
    wrap(mv::avg_kwise_log_euclidean(&t.0, k, &schedule(eps_schedule)?))
}

/// Returns `(divergence, optimizer)`; the optimizer is None when the
/// supports share no common vector.
#[pyfunction]
#[pyo3(signature = (t, eps_schedule = None))]
fn oveloh(t: &PyStateTuple, eps_schedule: Option<Vec<f64>>) -> PyResult<(PyFidelity, Option<PyDensityMatrix>)> {
    let res = mv::oveloh(&t.0, &schedule(eps_schedule)?).map_err(to_py)?;
    Ok((res.divergence.into(), res.optimizer.map(PyDensityMatrix)))
}

#[pyfunction]
#[pyo3(signature = (t, n_outcomes = None, budget = 20_000, restarts = 8, seed = 0))]
fn f_measured(
    t: &PyStateTuple,
    n_outcomes: Option<usize>,
    budget: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<PyFidelity> {
    wrap(mv::f_measured(&t.0, &MeasuredOptions { n_outcomes, budget, restarts, seed }))
}

#[pyfunction]
fn sdp_lower_bound_perm(t: &PyStateTuple) -> PyResult<f64> {
    mv::sdp_lower_bound_perm(&t.0).map_err(to_py)
}

#[pyfunction]
fn min_d_half(t: &PyStateTuple) -> PyResult<f64> {
    mv::min_d_half_closed_form(&t.0).map_err(to_py)
}

/// Run a property suite (or "all"); returns a list of report dicts.
#[pyfunction]
#[pyo3(signature = (suite, trials = 100, seed = 0))]
fn run_property_suite<'py>(py: Python<'py>, suite: &str, trials: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let reports = py.detach(|| harness::run_property_suite(suite, trials, seed)).map_err(to_py)?;
    json_to_py(py, &reports)
}

#[pyfunction]
fn suite_ids() -> Vec<&'static str> {
    harness::suite_ids()
}

#[pyfunction]
#[pyo3(signature = (which = "all"))]
fn reproduce<'py>(py: Python<'py>, which: &str) -> PyResult<Bound<'py, PyAny>> {
    let which: Reproduction = which.parse().map_err(to_py)?;
    let reports = py.detach(|| harness::reproduce_counterexamples(which)).map_err(to_py)?;
    json_to_py(py, &reports)
}

#[pymodule(name = "multifid")]
fn multifid_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyStateTuple>()?;
    m.add_class::<PyFidelity>()?;
    for f in [
        wrap_pyfunction!(uhlmann, m)?,
        wrap_pyfunction!(holevo, m)?,
        wrap_pyfunction!(fid_z, m)?,
        wrap_pyfunction!(avg_pairwise, m)?,
        wrap_pyfunction!(f_sdp, m)?,
        wrap_pyfunction!(f_secrecy, m)?,
        wrap_pyfunction!(f_geometric_sdp, m)?,
        wrap_pyfunction!(f_log_euclidean, m)?,
        wrap_pyfunction!(avg_kwise_log_euclidean, m)?,
        wrap_pyfunction!(oveloh, m)?,
        wrap_pyfunction!(f_measured, m)?,
        wrap_pyfunction!(sdp_lower_bound_perm, m)?,
        wrap_pyfunction!(min_d_half, m)?,
        wrap_pyfunction!(run_property_suite, m)?,
        wrap_pyfunction!(suite_ids, m)?,
        wrap_pyfunction!(reproduce, m)?,
    ] {
        m.add_function(f)?;
    }
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
