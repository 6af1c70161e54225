//! Python bindings. Fields are exposed as flat row-major lists (index
//! `i + n_x * j` for the node `(i/n_x, j/n_y)`); configurations and reports
//! cross the boundary as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::de::DeserializeOwned;
use serde::Serialize;

use symtorus::fixtures::PathExpr;
use symtorus::grid::{hamiltonian_vector_field, omega_contract};
use symtorus::hodge::{basis_norm, harmonic_basis, hodge_decompose};
use symtorus::hofer::estimate_e_reports;
use symtorus::isotopy::{compose_isotopies, hamiltonian_isotopy, inverse_isotopy};
use symtorus::verify::{run_check, verify_all, VerifyConfig, CHECK_NAMES};
use symtorus::{metrics, GridSpec, OptConfig, PathAnsatz, TimeMode, TimeSeries};

fn err(e: symtorus::Error) -> PyErr {
    use symtorus::Error as E;
    match e {
        E::InvalidGrid { .. }
        | E::ShapeMismatch { .. }
        | E::NonFinite { .. }
        | E::GridMismatch(_)
        | E::MetricNotSpd { .. }
        | E::NotClosed { .. }
        | E::NotSymplectic { .. }
        | E::NyquistExceeded { .. }
        | E::InvalidArgument(_)
        | E::Format(_)
        | E::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned + Default>(obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    let Some(obj) = obj.filter(|o| !o.is_none()) else {
        return Ok(T::default());
    };
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn same_grid(a: GridSpec, b: GridSpec) -> PyResult<()> {
    if a != b {
        return Err(PyValueError::new_err("operands live on different grids"));
    }
    Ok(())
}

fn time_mode(mode: &str) -> PyResult<TimeMode> {
    match mode {
        "l1" => Ok(TimeMode::L1),
        "sup" => Ok(TimeMode::Sup),
        _ => Err(PyValueError::new_err(format!("mode must be 'l1' or 'sup', got {mode:?}"))),
    }
}

/// Uniform periodic grid on the unit torus.
#[pyclass(frozen, skip_from_py_object, name = "Grid", module = "symtorus")]
#[derive(Clone, Copy)]
struct PyGrid(GridSpec);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n_x, n_y=None))]
    fn new(n_x: usize, n_y: Option<usize>) -> PyResult<Self> {
        GridSpec::new(n_x, n_y.unwrap_or(n_x)).map(Self).map_err(err)
    }

    #[getter]
    fn n_x(&self) -> usize {
        self.0.n_x()
    }

    #[getter]
    fn n_y(&self) -> usize {
        self.0.n_y()
    }

    /// Node coordinates in storage order.
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().collect()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {})", self.0.n_x(), self.0.n_y())
    }
}

#[pyclass(frozen, skip_from_py_object, name = "ScalarField", module = "symtorus")]
#[derive(Clone)]
struct PyScalarField(symtorus::ScalarField);

#[pymethods]
impl PyScalarField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        symtorus::ScalarField::new(grid.0, values).map(Self).map_err(err)
    }

    /// Samples `f(x, y)` at every node.
    #[staticmethod]
    fn from_function(grid: &PyGrid, f: &Bound<'_, PyAny>) -> PyResult<Self> {
        let values = grid
            .0
            .points()
            .map(|(x, y)| f.call1((x, y))?.extract::<f64>())
            .collect::<PyResult<Vec<_>>>()?;
        Self::new(grid, values)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid())
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn osc(&self) -> f64 {
        symtorus::grid::osc(&self.0)
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// Spectral interpolation at an arbitrary point.
    fn at(&self, x: f64, y: f64) -> f64 {
        symtorus::grid::interpolate(&self.0, (x, y))
    }

    /// `dH`.
    fn d(&self) -> PyOneForm {
        PyOneForm(symtorus::grid::d_scalar(&self.0))
    }

    /// `X_H = (∂_y H, −∂_x H)`.
    fn hamiltonian_vector_field(&self) -> PyVectorField {
        PyVectorField(hamiltonian_vector_field(&self.0))
    }
}

#[pyclass(frozen, skip_from_py_object, name = "OneForm", module = "symtorus")]
#[derive(Clone)]
struct PyOneForm(symtorus::OneForm);

#[pymethods]
impl PyOneForm {
    #[new]
    fn new(grid: &PyGrid, comp_x: Vec<f64>, comp_y: Vec<f64>) -> PyResult<Self> {
        symtorus::OneForm::new(grid.0, comp_x, comp_y).map(Self).map_err(err)
    }

    #[staticmethod]
    fn constant(grid: &PyGrid, a: f64, b: f64) -> Self {
        Self(symtorus::OneForm::constant(grid.0, a, b))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid())
    }

    fn components(&self) -> (Vec<f64>, Vec<f64>) {
        (self.0.comp_x().to_vec(), self.0.comp_y().to_vec())
    }

    /// Integrals over the two generating loops.
    fn periods(&self) -> (f64, f64) {
        self.0.periods()
    }

    fn closedness_defect(&self) -> f64 {
        symtorus::grid::closedness_defect(&self.0)
    }

    fn __add__(&self, other: &PyOneForm) -> PyResult<Self> {
        same_grid(self.0.grid(), other.0.grid())?;
        Ok(Self(self.0.axpy(1.0, &other.0)))
    }
}

#[pyclass(frozen, skip_from_py_object, name = "VectorField", module = "symtorus")]
#[derive(Clone)]
struct PyVectorField(symtorus::VectorField);

#[pymethods]
impl PyVectorField {
    #[new]
    fn new(grid: &PyGrid, v_x: Vec<f64>, v_y: Vec<f64>) -> PyResult<Self> {
        symtorus::VectorField::new(grid.0, v_x, v_y).map(Self).map_err(err)
    }

    #[staticmethod]
    fn constant(grid: &PyGrid, a: f64, b: f64) -> Self {
        Self(symtorus::VectorField::constant(grid.0, a, b))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid())
    }

    fn components(&self) -> (Vec<f64>, Vec<f64>) {
        (self.0.v_x().to_vec(), self.0.v_y().to_vec())
    }

    /// `i_X ω`.
    fn omega_contract(&self) -> PyOneForm {
        PyOneForm(omega_contract(&self.0))
    }

    fn __add__(&self, other: &PyVectorField) -> PyResult<Self> {
        same_grid(self.0.grid(), other.0.grid())?;
        Ok(Self(&self.0 + &other.0))
    }
}

/// Riemannian metric given by its pointwise coefficients.
#[pyclass(frozen, skip_from_py_object, name = "Metric", module = "symtorus")]
#[derive(Clone)]
struct PyMetric(symtorus::MetricSpec);

#[pymethods]
impl PyMetric {
    #[new]
    #[pyo3(signature = (g11, g12, g22, tag=None))]
    fn new(g11: &PyScalarField, g12: &PyScalarField, g22: &PyScalarField, tag: Option<String>) -> PyResult<Self> {
        let (a, b, c) = (g11.0.clone(), g12.0.clone(), g22.0.clone());
        match tag {
            Some(t) => symtorus::MetricSpec::with_tag(a, b, c, t),
            None => symtorus::MetricSpec::new(a, b, c),
        }
        .map(Self)
        .map_err(err)
    }

    #[staticmethod]
    fn flat(grid: &PyGrid) -> Self {
        Self(symtorus::MetricSpec::flat(grid.0))
    }

    /// `λ · g_flat` for a positive field `λ`.
    #[staticmethod]
    fn conformal(factor: &PyScalarField) -> PyResult<Self> {
        symtorus::MetricSpec::conformal(&factor.0).map(Self).map_err(err)
    }

    #[getter]
    fn tag(&self) -> String {
        self.0.tag().to_string()
    }

    #[getter]
    fn is_flat(&self) -> bool {
        self.0.is_flat()
    }
}

/// A metric together with a harmonic basis, the data a norm depends on.
#[pyclass(frozen, skip_from_py_object, name = "NormContext", module = "symtorus")]
#[derive(Clone)]
struct PyNormContext(symtorus::NormContext);

#[pymethods]
impl PyNormContext {
    /// Canonical basis of `metric`. Pass `closed_tol` to relax the curl check.
    #[new]
    #[pyo3(signature = (metric, closed_tol=None))]
    fn new(metric: &PyMetric, closed_tol: Option<f64>) -> PyResult<Self> {
        let ctx = symtorus::NormContext::for_metric(&metric.0).map_err(err)?;
        Ok(Self(match closed_tol {
            Some(t) => ctx.with_closed_tol(t),
            None => ctx,
        }))
    }

    #[staticmethod]
    fn flat(grid: &PyGrid) -> PyResult<Self> {
        symtorus::NormContext::flat(grid.0).map(Self).map_err(err)
    }

    /// Basis `{c₁h₁, c₂h₂}` of the same metric.
    fn rescaled(&self, c1: f64, c2: f64) -> PyResult<Self> {
        let basis = self.0.basis().rescaled(c1, c2).map_err(err)?;
        Ok(Self(symtorus::NormContext::new(basis).with_closed_tol(self.0.closed_tol())))
    }

    #[getter]
    fn metric_tag(&self) -> String {
        self.0.metric().tag().to_string()
    }

    #[getter]
    fn basis_id(&self) -> String {
        self.0.basis().id()
    }

    fn period_matrix(&self) -> [[f64; 2]; 2] {
        self.0.basis().period_matrix()
    }

    /// `‖X‖` of a symplectic field.
    fn norm(&self, x: &PyVectorField) -> PyResult<f64> {
        metrics::symp_norm(&x.0, &self.0).map_err(err)
    }

    /// Hodge split of `i_X ω`.
    fn split(&self, x: &PyVectorField) -> PyResult<PyHodgeSplit> {
        self.0.split(&x.0).map(PyHodgeSplit).map_err(err)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "HodgeSplit", module = "symtorus")]
struct PyHodgeSplit(symtorus::HodgeSplit);

#[pymethods]
impl PyHodgeSplit {
    /// Coefficients in the harmonic basis.
    #[getter]
    fn coefficients(&self) -> [f64; 2] {
        self.0.lambda
    }

    #[getter]
    fn harmonic(&self) -> PyOneForm {
        PyOneForm(self.0.harmonic.clone())
    }

    #[getter]
    fn potential(&self) -> PyScalarField {
        PyScalarField(self.0.potential.clone())
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual
    }

    fn osc(&self) -> f64 {
        self.0.osc()
    }

    /// `|λ₁| + |λ₂|`.
    fn basis_norm(&self) -> f64 {
        basis_norm(&self.0)
    }
}

/// `θ = Σ λᵢ hᵢ + du` for a closed 1-form; the canonical basis of `metric`
/// (flat when omitted) is used.
#[pyfunction]
#[pyo3(signature = (theta, metric=None))]
fn hodge(theta: &PyOneForm, metric: Option<&PyMetric>) -> PyResult<PyHodgeSplit> {
    let g = match metric {
        Some(m) => m.0.clone(),
        None => symtorus::MetricSpec::flat(theta.0.grid()),
    };
    let basis = harmonic_basis(&g).map_err(err)?;
    hodge_decompose(&theta.0, &g, &basis).map(PyHodgeSplit).map_err(err)
}

/// Time-dependent symplectic generator `(a, b) + X_h`, described by a dict
/// `{"a": [...], "b": [...], "h": [...]}` of term lists.
#[pyclass(frozen, skip_from_py_object, name = "Path", module = "symtorus")]
#[derive(Clone)]
struct PyPath(PathExpr);

#[pymethods]
impl PyPath {
    #[new]
    #[pyo3(signature = (spec=None))]
    fn new(spec: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        from_py(spec).map(Self)
    }

    #[staticmethod]
    fn translation(a: f64, b: f64) -> Self {
        Self(PathExpr::translation(a, b))
    }

    /// Generated by `cos(2πy)/(2π)`; its time-1 map is `(x − sin 2πy, y)`.
    #[staticmethod]
    fn shear() -> Self {
        Self(symtorus::fixtures::shear_path())
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn field(&self, grid: &PyGrid, t: f64) -> PyResult<PyVectorField> {
        self.0.field(grid.0, t).map(PyVectorField).map_err(err)
    }

    #[pyo3(signature = (grid, n_t=65, substeps=4))]
    fn isotopy(&self, py: Python<'_>, grid: &PyGrid, n_t: usize, substeps: usize) -> PyResult<PyIsotopy> {
        let expr = self.0.clone();
        let g = grid.0;
        py.detach(move || expr.isotopy(g, n_t, substeps)).map(PyIsotopy).map_err(err)
    }
}

/// Isotopy sampled at `n_t` uniform times, with forward and inverse maps.
#[pyclass(frozen, skip_from_py_object, name = "Isotopy", module = "symtorus")]
#[derive(Clone)]
struct PyIsotopy(symtorus::Isotopy);

#[pymethods]
impl PyIsotopy {
    /// Flow of the Hamiltonians `H_t`, one field per time sample.
    #[staticmethod]
    #[pyo3(signature = (hamiltonians, substeps=4))]
    fn from_hamiltonians(hamiltonians: Vec<PyRef<'_, PyScalarField>>, substeps: usize) -> PyResult<Self> {
        let h = TimeSeries::new(hamiltonians.iter().map(|f| f.0.clone()).collect()).map_err(err)?;
        hamiltonian_isotopy(&h, substeps).map(Self).map_err(err)
    }

    #[getter]
    fn n_t(&self) -> usize {
        self.0.n_t()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid())
    }

    /// Max mismatch between the generator and the finite-difference velocity.
    fn consistency_residual(&self) -> f64 {
        self.0.consistency_residual()
    }

    fn area_defect(&self) -> f64 {
        self.0.area_defect()
    }

    /// `φ_{t_i}(x, y)`, reduced to `[0, 1)²`; the endpoint by default.
    #[pyo3(signature = (x, y, i=None))]
    fn apply(&self, x: f64, y: f64, i: Option<usize>) -> PyResult<(f64, f64)> {
        let i = self.index(i)?;
        Ok(wrap(self.0.map(i).forward().apply((x, y))))
    }

    /// `φ_{t_i}⁻¹(x, y)`, reduced to `[0, 1)²`; the endpoint by default.
    #[pyo3(signature = (x, y, i=None))]
    fn apply_inverse(&self, x: f64, y: f64, i: Option<usize>) -> PyResult<(f64, f64)> {
        let i = self.index(i)?;
        Ok(wrap(self.0.map(i).inverse_field().apply((x, y))))
    }

    fn generator(&self, i: usize) -> PyResult<PyVectorField> {
        let i = self.index(Some(i))?;
        Ok(PyVectorField(self.0.generator().get(i).clone()))
    }

    /// `t ↦ φ_t⁻¹`.
    fn inverse(&self) -> PyResult<Self> {
        inverse_isotopy(&self.0).map(Self).map_err(err)
    }

    /// `t ↦ φ_t ∘ ψ_t`.
    fn compose(&self, psi: &PyIsotopy) -> PyResult<Self> {
        compose_isotopies(&self.0, &psi.0).map(Self).map_err(err)
    }

    /// Length `∫ ‖φ̇_t‖ dt` (or the sup over time).
    #[pyo3(signature = (ctx, mode="l1"))]
    fn length(&self, ctx: &PyNormContext, mode: &str) -> PyResult<f64> {
        let series = metrics::norm_series(self.0.generator(), &ctx.0).map_err(err)?;
        Ok(time_mode(mode)?.reduce(&series))
    }
}

impl PyIsotopy {
    fn index(&self, i: Option<usize>) -> PyResult<usize> {
        let n = self.0.n_t();
        match i {
            None => Ok(n - 1),
            Some(i) if i < n => Ok(i),
            Some(i) => Err(PyValueError::new_err(format!("time index {i} out of range 0..{n}"))),
        }
    }
}

fn wrap((x, y): (f64, f64)) -> (f64, f64) {
    (x.rem_euclid(1.0), y.rem_euclid(1.0))
}

/// Distance report between two isotopies on the same grids.
#[pyfunction]
#[pyo3(signature = (phi, psi, ctx, mode="l1"))]
fn distance<'py>(
    py: Python<'py>,
    phi: &PyIsotopy,
    psi: &PyIsotopy,
    ctx: &PyNormContext,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = time_mode(mode)?;
    let (a, b, c) = (&phi.0, &psi.0, &ctx.0);
    let report = py.detach(|| metrics::distance(a, b, c, mode)).map_err(err)?;
    to_py(py, &report)
}

/// Upper estimate of the Hofer-like energy of the endpoint of `target`,
/// searched over paths with the given numbers of harmonics. `options`
/// overrides fields of the optimiser settings.
#[pyfunction]
#[pyo3(signature = (target, ctx, n_harm_t=1, n_harm_xy=1, options=None))]
fn hofer_energy<'py>(
    py: Python<'py>,
    target: &PyIsotopy,
    ctx: &PyNormContext,
    n_harm_t: usize,
    n_harm_xy: usize,
    options: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: OptConfig = from_py(options)?;
    let map = target.0.endpoint();
    let c = &ctx.0;
    let ansatz = PathAnsatz::new(n_harm_t, n_harm_xy);
    let (e, fwd, inv) = py.detach(|| estimate_e_reports(&map, &ansatz, c, &cfg)).map_err(err)?;
    to_py(py, &serde_json::json!({"e": e, "forward": fwd, "inverse": inv}))
}

#[pyfunction]
fn check_names() -> Vec<&'static str> {
    CHECK_NAMES.to_vec()
}

/// Runs one named check; `config` overrides fields of the defaults.
#[pyfunction]
#[pyo3(signature = (name, config=None))]
fn verify<'py>(py: Python<'py>, name: &str, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg: VerifyConfig = from_py(config)?;
    if !CHECK_NAMES.contains(&name) {
        return Err(PyValueError::new_err(format!("unknown check {name:?}")));
    }
    let report = py.detach(|| run_check(name, &cfg)).map_err(err)?;
    to_py(py, &report)
}

/// Runs every check.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn verify_everything<'py>(py: Python<'py>, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg: VerifyConfig = from_py(config)?;
    let reports = py.detach(|| verify_all(&cfg)).map_err(err)?;
    to_py(py, &reports)
}

#[pymodule]
#[pyo3(name = "symtorus")]
fn symtorus_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyScalarField>()?;
    m.add_class::<PyOneForm>()?;
    m.add_class::<PyVectorField>()?;
    m.add_class::<PyMetric>()?;
    m.add_class::<PyNormContext>()?;
    m.add_class::<PyHodgeSplit>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyIsotopy>()?;
    m.add_function(wrap_pyfunction!(hodge, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(hofer_energy, m)?)?;
    m.add_function(wrap_pyfunction!(check_names, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_everything, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
