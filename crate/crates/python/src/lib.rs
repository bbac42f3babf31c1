//! Python bindings: forms, metric settings, operator extraction, reference formulas and identity suites.

use conformal_forms::error::Error;
use conformal_forms::exterior::{codifferential, exterior_derivative, form_laplacian, quadrature_inner};
use conformal_forms::fields::{random_lowfreq_form, FormField, Phase, TrigForm, TrigPolynomial, TrigTerm};
use conformal_forms::grid::TorusGrid;
use conformal_forms::io::{load, save, Field};
use conformal_forms::reference::{ref_dim4, ref_dim6, ConstantTable};
use conformal_forms::solver::{apply_named, OPERATORS};
use conformal_forms::verification::{run_suite as core_run_suite, MetricSpec, Setting, SUITES};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

/// (amplitude, mode vector, "sin" | "cos")
pub type TermSpec = (f64, Vec<i32>, String);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Grid(_)
        | Error::Axis { .. }
        | Error::Degree(_)
        | Error::Dimension(_)
        | Error::Params(_)
        | Error::NotClosed(_)
        | Error::Format(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Builds a trigonometric polynomial from Python term tuples.
pub fn trig_polynomial(n: usize, terms: &[TermSpec]) -> Result<TrigPolynomial, String> {
    let terms = terms
        .iter()
        .map(|(a, mode, phase)| {
            if mode.len() != n {
                return Err(format!("mode {mode:?} needs {n} entries"));
            }
            let phase = match phase.as_str() {
                "sin" => Phase::Sin,
                "cos" => Phase::Cos,
                other => return Err(format!("phase must be 'sin' or 'cos', got {other:?}")),
            };
            Ok(TrigTerm { amplitude: *a, mode: mode.clone(), phase })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrigPolynomial::new(terms))
}

/// A differential form sampled on a periodic grid, components in lexicographic multi-index order.
#[pyclass(name = "Form", module = "conformal_forms", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyForm {
    pub inner: FormField,
}

#[pymethods]
impl PyForm {
    #[new]
    fn new(sizes: Vec<usize>, degree: usize, values: Vec<f64>) -> PyResult<Self> {
        let grid = TorusGrid::new(&sizes).map_err(to_py)?;
        Ok(PyForm { inner: FormField::from_data(&grid, degree, values).map_err(to_py)? })
    }

    /// Deterministic band-limited random form.
    #[staticmethod]
    #[pyo3(signature = (n, size, degree, seed, max_mode=1))]
    fn random(n: usize, size: usize, degree: usize, seed: u64, max_mode: usize) -> PyResult<Self> {
        let grid = TorusGrid::cube(n, size).map_err(to_py)?;
        Ok(PyForm { inner: random_lowfreq_form(&grid, degree, max_mode, seed).map_err(to_py)? })
    }

    /// Form whose components are trigonometric polynomials given as lists of term tuples.
    #[staticmethod]
    fn from_trig(n: usize, size: usize, degree: usize, components: Vec<Vec<TermSpec>>) -> PyResult<Self> {
        let grid = TorusGrid::cube(n, size).map_err(to_py)?;
        let comps = components.iter().map(|c| trig_polynomial(n, c)).collect::<Result<Vec<_>, _>>().map_err(PyValueError::new_err)?;
        Ok(PyForm { inner: TrigForm { n, degree, comps }.sample_checked(&grid).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        match load(path).map_err(to_py)? {
            Field::Form(w) => Ok(PyForm { inner: w }),
            Field::Scalar(f) => Ok(PyForm { inner: FormField::from_scalar(&f) }),
            Field::Tensor(_) => Err(PyValueError::new_err(format!("{path} holds a tensor, not a form"))),
        }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save(path, &Field::Form(self.inner.clone())).map_err(to_py)
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.grid.n()
    }

    #[getter]
    fn sizes(&self) -> Vec<usize> {
        self.inner.grid.sizes().to_vec()
    }

    /// All values, component-major.
    fn values(&self) -> Vec<f64> {
        self.inner.data.clone()
    }

    fn component(&self, c: usize) -> PyResult<Vec<f64>> {
        if c >= self.inner.n_comps() {
            return Err(PyValueError::new_err(format!("component {c} of {}", self.inner.n_comps())));
        }
        Ok(self.inner.comp(c).to_vec())
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn scale(&self, s: f64) -> Self {
        PyForm { inner: self.inner.scale(s) }
    }

    fn __add__(&self, other: &PyForm) -> PyResult<Self> {
        self.check_compatible(other)?;
        Ok(PyForm { inner: self.inner.add(&other.inner) })
    }

    fn __sub__(&self, other: &PyForm) -> PyResult<Self> {
        self.check_compatible(other)?;
        Ok(PyForm { inner: self.inner.sub(&other.inner) })
    }

    fn __repr__(&self) -> String {
        format!("Form(degree={}, sizes={:?})", self.inner.degree, self.inner.grid.sizes())
    }
}

impl PyForm {
    fn check_compatible(&self, other: &PyForm) -> PyResult<()> {
        if self.inner.degree != other.inner.degree || self.inner.grid.sizes() != other.inner.grid.sizes() {
            return Err(PyValueError::new_err("forms differ in degree or grid"));
        }
        Ok(())
    }
}

/// Boundary metric (flat or e^{2φ}·flat) on a cubic grid with its curvature and collar Hodge star series.
#[pyclass(name = "Setting", module = "conformal_forms", frozen)]
pub struct PySetting {
    pub inner: Setting,
}

#[pymethods]
impl PySetting {
    /// `phi` is a list of (amplitude, mode, "sin" | "cos") terms; None gives the flat metric.
    #[new]
    #[pyo3(signature = (n, size, phi=None))]
    fn new(n: usize, size: usize, phi: Option<Vec<TermSpec>>) -> PyResult<Self> {
        let spec = match phi {
            None => MetricSpec::Flat,
            Some(t) => MetricSpec::Conformal { phi: trig_polynomial(n, &t).map_err(PyValueError::new_err)? },
        };
        Ok(PySetting { inner: Setting::new(n, size, &spec).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.grid.sizes()[0]
    }

    /// Applies a solver operator by name (see OPERATORS); `ell` is needed for "Lk_ell".
    #[pyo3(signature = (operator, form, ell=None))]
    fn apply(&self, operator: &str, form: &PyForm, ell: Option<usize>) -> PyResult<PyForm> {
        self.check_grid(form)?;
        Ok(PyForm { inner: apply_named(operator, &form.inner, ell, &self.inner.star).map_err(to_py)? })
    }

    /// Closed-form curvature expression of a named operator ("L1", "G1", "Q0", ...) in dimension 4 or 6.
    fn reference(&self, name: &str, form: &PyForm) -> PyResult<PyForm> {
        self.check_grid(form)?;
        let w = match self.inner.n() {
            4 => ref_dim4(name, &form.inner, &self.inner.curv),
            _ => ref_dim6(name, &form.inner, &self.inner.curv),
        };
        Ok(PyForm { inner: w.map_err(to_py)? })
    }

    fn d(&self, form: &PyForm) -> PyResult<PyForm> {
        self.check_grid(form)?;
        Ok(PyForm { inner: exterior_derivative(&form.inner).map_err(to_py)? })
    }

    fn delta(&self, form: &PyForm) -> PyResult<PyForm> {
        self.check_grid(form)?;
        Ok(PyForm { inner: codifferential(&form.inner, self.inner.metric()).map_err(to_py)? })
    }

    /// Hodge Laplacian dδ + δd of the boundary metric.
    fn laplacian(&self, form: &PyForm) -> PyResult<PyForm> {
        self.check_grid(form)?;
        Ok(PyForm { inner: form_laplacian(&form.inner, self.inner.metric()) })
    }

    /// L² inner product with respect to the boundary metric.
    fn inner(&self, a: &PyForm, b: &PyForm) -> PyResult<f64> {
        self.check_grid(a)?;
        self.check_grid(b)?;
        quadrature_inner(&a.inner, &b.inner, self.inner.metric()).map_err(to_py)
    }

    fn scalar_curvature(&self) -> Vec<f64> {
        self.inner.curv.scal.values.clone()
    }

    fn __repr__(&self) -> String {
        format!("Setting(n={}, size={}, metric={})", self.inner.n(), self.size(), self.inner.spec.describe())
    }
}

impl PySetting {
    fn check_grid(&self, form: &PyForm) -> PyResult<()> {
        self.inner.grid.same_as(&form.inner.grid).map_err(to_py)
    }
}

/// Runs an identity suite and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (name, seed=0))]
fn run_suite(name: &str, seed: u64) -> PyResult<String> {
    let report = core_run_suite(name, seed).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Normalization constant c_k^ℓ in dimension n.
#[pyfunction]
fn c_k_ell(n: usize, k: usize, ell: usize) -> f64 {
    ConstantTable::new(n).c_k_ell(k, ell)
}

/// Critical normalization constant c_k in dimension n.
#[pyfunction]
fn c_k(n: usize, k: usize) -> f64 {
    ConstantTable::new(n).c_k(k)
}

#[pymodule]
#[pyo3(name = "conformal_forms")]
pub fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForm>()?;
    m.add_class::<PySetting>()?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(c_k_ell, m)?)?;
    m.add_function(wrap_pyfunction!(c_k, m)?)?;
    m.add("OPERATORS", OPERATORS.to_vec())?;
    m.add("SUITES", SUITES.to_vec())?;
    Ok(())
}
