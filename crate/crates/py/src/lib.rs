//! Python bindings. Fields cross the boundary as flat lists in row-major
//! order (`x` fastest, `index = j * n + i`); reports come back as dicts.

use geoflow_core::calculus::hamiltonian;
use geoflow_core::criteria::detection::{detection_integral, limit_target, BumpSpec};
use geoflow_core::criteria::{identity_battery, run_criteria_suite, SuiteOptions, IDENTITY_TOL};
use geoflow_core::euler_arnold::{evolve as evolve_flow, FlowContext, Group, IntegratorConfig};
use geoflow_core::fieldexpr::eval_expression as eval_expr;
use geoflow_core::geometry::{christoffels, gauss_curvature, SymTensorField};
use geoflow_core::hodge::{harmonic_basis, hodge_decompose, poisson_solve as solve};
use geoflow_core::{Components, DiffMode, GeoError, GridSpec, MetricField, OneFormField, ScalarField};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(geoflow, GeoflowError, PyException);

fn err(e: GeoError) -> PyErr {
    GeoflowError::new_err(e.to_string())
}

fn grid(n: usize, mode: &str) -> PyResult<GridSpec> {
    let mode: DiffMode = mode.parse().map_err(err)?;
    GridSpec::new(n, mode).map_err(err)
}

fn scalar(g: &MetricField, values: Vec<f64>) -> PyResult<ScalarField> {
    ScalarField::new(*g.grid(), values).map_err(err)
}

fn form_pair(phi: &OneFormField) -> (Vec<f64>, Vec<f64>) {
    (phi.comp_x().to_vec(), phi.comp_y().to_vec())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| GeoflowError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A Riemannian metric sampled on an `n × n` periodic grid.
#[pyclass(name = "Metric", module = "geoflow", frozen)]
struct PyMetric {
    inner: MetricField,
}

#[pymethods]
impl PyMetric {
    #[staticmethod]
    #[pyo3(signature = (n, mode = "spectral"))]
    fn flat(n: usize, mode: &str) -> PyResult<Self> {
        Ok(PyMetric { inner: MetricField::flat(grid(n, mode)?) })
    }

    /// `e^{2φ}(dx² + dy²)` with `φ` given as an expression in `x`, `y`.
    #[staticmethod]
    #[pyo3(signature = (phi, n, mode = "spectral"))]
    fn conformal(phi: &str, n: usize, mode: &str) -> PyResult<Self> {
        let gr = grid(n, mode)?;
        let inner = MetricField::conformal(&eval_expr(phi, &gr).map_err(err)?).map_err(err)?;
        Ok(PyMetric { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (g11, g12, g22, n, mode = "spectral"))]
    fn general(g11: &str, g12: &str, g22: &str, n: usize, mode: &str) -> PyResult<Self> {
        let gr = grid(n, mode)?;
        let f = |s: &str| eval_expr(s, &gr).map_err(err);
        let inner = MetricField::from_components(&f(g11)?, &f(g12)?, &f(g22)?).map_err(err)?;
        Ok(PyMetric { inner })
    }

    /// Metric from sampled component arrays.
    #[staticmethod]
    #[pyo3(signature = (g11, g12, g22, n, mode = "spectral"))]
    fn from_components(g11: Vec<f64>, g12: Vec<f64>, g22: Vec<f64>, n: usize, mode: &str) -> PyResult<Self> {
        let gr = grid(n, mode)?;
        let f = |v: Vec<f64>| ScalarField::new(gr, v).map_err(err);
        let inner = MetricField::from_components(&f(g11)?, &f(g12)?, &f(g22)?).map_err(err)?;
        Ok(PyMetric { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.grid().n()
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.grid().mode().to_string()
    }

    fn components(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (self.inner.g11().to_vec(), self.inner.g12().to_vec(), self.inner.g22().to_vec())
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn gauss_curvature(&self) -> Vec<f64> {
        gauss_curvature(&self.inner, &christoffels(&self.inner)).into_values()
    }

    /// Orthonormal harmonic 1-forms as `[(dx, dy), (dx, dy)]`.
    fn harmonic_basis(&self) -> PyResult<Vec<(Vec<f64>, Vec<f64>)>> {
        let b = harmonic_basis(&self.inner).map_err(err)?;
        Ok(b.beta.iter().map(form_pair).collect())
    }

    fn __repr__(&self) -> String {
        format!("Metric(n={}, mode={})", self.n(), self.mode())
    }
}

/// Samples an expression in `x`, `y`, `pi` on the grid.
#[pyfunction]
#[pyo3(signature = (src, n, mode = "spectral"))]
fn eval_expression(src: &str, n: usize, mode: &str) -> PyResult<Vec<f64>> {
    Ok(eval_expr(src, &grid(n, mode)?).map_err(err)?.into_values())
}

/// Mean-zero solution of `Δu = rhs` (`Δ = δd`, positive).
#[pyfunction]
fn poisson_solve(metric: &PyMetric, rhs: Vec<f64>) -> PyResult<Vec<f64>> {
    let g = &metric.inner;
    Ok(solve(&scalar(g, rhs)?, g).map_err(err)?.into_values())
}

/// Splits the 1-form `dx_coef dx + dy_coef dy` into exact, coexact and
/// harmonic parts.
#[pyfunction]
fn hodge_decompose_form(py: Python<'_>, metric: &PyMetric, dx_coef: Vec<f64>, dy_coef: Vec<f64>) -> PyResult<Py<PyAny>> {
    let g = &metric.inner;
    let phi = OneFormField::new(*g.grid(), dx_coef, dy_coef).map_err(err)?;
    let split = py.detach(|| hodge_decompose(&phi, g)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("exact", form_pair(&split.exact))?;
    d.set_item("coexact", form_pair(&split.coexact))?;
    d.set_item("harmonic", form_pair(&split.harmonic))?;
    d.set_item("potential", split.f.values().to_vec())?;
    d.set_item("orthogonality_defect", split.orthogonality_defect(g).map_err(err)?)?;
    d.set_item("reconstruction_defect", split.reconstruction_defect(&phi, g))?;
    Ok(d.into_any().unbind())
}

/// Runs every flatness condition; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (metric, metric_id = "custom"))]
fn run_criteria(py: Python<'_>, metric: &PyMetric, metric_id: &str) -> PyResult<Py<PyAny>> {
    let opts = SuiteOptions { metric_id: metric_id.to_string(), ..Default::default() };
    let report = py.detach(|| run_criteria_suite(&metric.inner, &opts)).map_err(err)?;
    serialize(py, &report)
}

/// Structural identity residuals as a list of dicts.
#[pyfunction]
#[pyo3(signature = (metric, tolerance = IDENTITY_TOL))]
fn identities(py: Python<'_>, metric: &PyMetric, tolerance: f64) -> PyResult<Py<PyAny>> {
    let rows = py.detach(|| identity_battery(&metric.inner, tolerance)).map_err(err)?;
    serialize(py, &rows)
}

/// Integrates the geodesic equation from `X₀ = ♯_ω d f0`.
#[pyfunction]
#[pyo3(signature = (metric, f0, dt = 1e-3, t_end = 1.0, group = "sym", record_every = 10))]
fn evolve(py: Python<'_>, metric: &PyMetric, f0: &str, dt: f64, t_end: f64, group: &str, record_every: usize) -> PyResult<Py<PyAny>> {
    let g = &metric.inner;
    let group: Group = group.parse().map_err(err)?;
    let f = eval_expr(f0, g.grid()).map_err(err)?;
    let cfg = IntegratorConfig { dt, t_end, group, record_every, ..Default::default() };
    let tr = py
        .detach(|| {
            let ctx = FlowContext::new(g.clone())?;
            evolve_flow(&hamiltonian(&f, g), &cfg, &ctx)
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("records", serialize(py, &tr.records)?)?;
    d.set_item("max_harmonic_drift", tr.max_abs_coeff())?;
    d.set_item("energy_drift", tr.energy_drift())?;
    d.set_item("max_div_norm", tr.max_div_norm())?;
    d.set_item("steps", tr.steps)?;
    let x = &tr.final_state.x;
    d.set_item("final", (x.comp_x().to_vec(), x.comp_y().to_vec()))?;
    d.set_item("final_max_speed", x.max_abs())?;
    Ok(d.into_any().unbind())
}

/// `(ε ∫ T(Z_ε, Z_ε) μ, limit)` for a bump of width `eps` centred on node
/// `center`; `tensor` defaults to the metric itself.
#[pyfunction]
#[pyo3(signature = (metric, eps, center = None, tensor = None))]
fn detection(
    metric: &PyMetric,
    eps: f64,
    center: Option<(usize, usize)>,
    tensor: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
) -> PyResult<(f64, f64)> {
    let g = &metric.inner;
    let n = g.grid().n();
    let t = match tensor {
        Some((a, b, c)) => SymTensorField::new(&scalar(g, a)?, &scalar(g, b)?, &scalar(g, c)?),
        None => SymTensorField::from_metric(g),
    };
    let spec = BumpSpec { center: center.unwrap_or((n / 2, n / 2)), eps };
    Ok((detection_integral(&t, &spec, g).map_err(err)?, limit_target(&t, &spec, g).map_err(err)?))
}

#[pymodule]
fn geoflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("GeoflowError", m.py().get_type::<GeoflowError>())?;
    m.add_class::<PyMetric>()?;
    m.add_function(wrap_pyfunction!(eval_expression, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_solve, m)?)?;
    m.add_function(wrap_pyfunction!(hodge_decompose_form, m)?)?;
    m.add_function(wrap_pyfunction!(run_criteria, m)?)?;
    m.add_function(wrap_pyfunction!(identities, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(detection, m)?)?;
    Ok(())
}
