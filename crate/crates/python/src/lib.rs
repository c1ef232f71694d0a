//! Python bindings for mixcharts.
//!
//! Matrices cross the boundary as lists of rows. Column indices and chart
//! pairs are zero-based, as in the Rust API. Every library error is raised
//! as `mixcharts.MixchartsError` (a `ValueError`) whose `kind` attribute
//! names the error variant.

use mixcharts_core as core;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use core::charts::{DEFAULT_CLASSIFY_TOL, DEFAULT_FD_STEP};
use core::factor::DEFAULT_COMBINATION_TOL;
use core::matrix::DEFAULT_RANK_TOL;
use core::{ChartId, FitSource, OptimizerSettings, SampleSpec};

create_exception!(mixcharts, MixchartsError, PyValueError);

fn err(e: core::Error) -> PyErr {
    Python::attach(|py| {
        let exc = MixchartsError::new_err(e.to_string());
        let _ = exc.value(py).setattr("kind", e.kind());
        exc
    })
}

fn chart_id(pair: (usize, usize)) -> PyResult<ChartId> {
    ChartId::new(pair.0, pair.1).map_err(err)
}

fn pair(c: ChartId) -> (usize, usize) {
    (c.j1, c.j2)
}

fn snake<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[pyclass(
    name = "ProbabilityMatrix",
    module = "mixcharts",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyProbabilityMatrix(core::ProbabilityMatrix);

#[pymethods]
impl PyProbabilityMatrix {
    #[new]
    #[pyo3(signature = (rows, sum_tol = core::matrix::DEFAULT_SUM_TOL))]
    fn new(rows: Vec<Vec<f64>>, sum_tol: f64) -> PyResult<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(err(core::Error::InvalidShape {
                rows: rows.len(),
                cols,
                reason: "rows have different lengths".into(),
            }));
        }
        let shape = core::Shape::new(rows.len(), cols).map_err(err)?;
        let flat: Vec<f64> = rows.concat();
        core::validate_probability(shape, &flat, sum_tol)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.rows(), self.0.cols())
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    fn max_abs_diff(&self, other: &Self) -> PyResult<f64> {
        if self.0.shape() != other.0.shape() {
            return Err(err(core::Error::ShapeMismatch {
                expected: self.0.shape().to_string(),
                found: other.0.shape().to_string(),
            }));
        }
        Ok(self.0.max_abs_diff(&other.0))
    }

    fn __repr__(&self) -> String {
        format!("ProbabilityMatrix({:?})", self.0.to_rows())
    }
}

#[pyclass(
    name = "ContingencyTable",
    module = "mixcharts",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyContingencyTable(core::ContingencyTable);

#[pymethods]
impl PyContingencyTable {
    #[new]
    fn new(rows: Vec<Vec<u64>>) -> PyResult<Self> {
        core::ContingencyTable::from_rows(&rows)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        let s = self.0.shape();
        (s.rows, s.cols)
    }

    #[getter]
    fn total(&self) -> u64 {
        self.0.total()
    }

    fn to_list(&self) -> Vec<Vec<u64>> {
        self.0.to_rows()
    }

    fn normalize(&self) -> PyResult<PyProbabilityMatrix> {
        core::normalize(&self.0)
            .map(PyProbabilityMatrix)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ContingencyTable({:?})", self.0.to_rows())
    }
}

#[pyclass(
    name = "MixtureRepresentation",
    module = "mixcharts",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyMixture(core::MixtureRepresentation);

#[pymethods]
impl PyMixture {
    #[new]
    fn new(
        weights: Vec<f64>,
        col_factors: Vec<Vec<f64>>,
        row_factors: Vec<Vec<f64>>,
    ) -> PyResult<Self> {
        core::MixtureRepresentation::new(weights, col_factors, row_factors)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn col_factors(&self) -> Vec<Vec<f64>> {
        self.0.col_factors().to_vec()
    }

    #[getter]
    fn row_factors(&self) -> Vec<Vec<f64>> {
        self.0.row_factors().to_vec()
    }

    fn to_matrix(&self) -> PyProbabilityMatrix {
        PyProbabilityMatrix(core::mixture_to_matrix(&self.0))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap_or_default()
    }
}

#[pyclass(name = "ChartPoint", module = "mixcharts", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChartPoint(core::ChartPoint);

#[pymethods]
impl PyChartPoint {
    /// `b` and `d` list the entries for the columns outside `chart`, in
    /// ascending column order.
    #[new]
    fn new(
        chart: (usize, usize),
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
        alpha: f64,
    ) -> PyResult<Self> {
        core::ChartPoint::new(chart_id(chart)?, a, b, c, d, alpha)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(Self)
            .map_err(|e| err(core::Error::from(e)))
    }

    #[getter]
    fn chart(&self) -> (usize, usize) {
        pair(self.0.chart())
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        let s = self.0.shape();
        (s.rows, s.cols)
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.0.a().to_vec()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.0.b().to_vec()
    }

    #[getter]
    fn c(&self) -> Vec<f64> {
        self.0.c().to_vec()
    }

    #[getter]
    fn d(&self) -> Vec<f64> {
        self.0.d().to_vec()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    fn coords(&self) -> Vec<f64> {
        self.0.coords()
    }

    fn in_domain(&self) -> bool {
        core::in_domain(&self.0)
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap_or_default()
    }

    fn __repr__(&self) -> String {
        self.to_json()
    }
}

#[pyclass(name = "FitResult", module = "mixcharts", frozen)]
struct PyFitResult(core::FitResult);

#[pymethods]
impl PyFitResult {
    #[getter]
    fn value(&self) -> f64 {
        self.0.value
    }

    /// `None` for the rank-one fit, otherwise the chart pair.
    #[getter]
    fn chart(&self) -> Option<(usize, usize)> {
        match self.0.source {
            FitSource::Rank1 => None,
            FitSource::Chart(c) => Some(pair(c)),
        }
    }

    #[getter]
    fn flags(&self) -> Vec<String> {
        self.0.flags.iter().map(snake).collect()
    }

    #[getter]
    fn matrix(&self) -> PyProbabilityMatrix {
        PyProbabilityMatrix(self.0.matrix.clone())
    }

    #[getter]
    fn point(&self) -> Option<PyChartPoint> {
        self.0.point.clone().map(PyChartPoint)
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap_or_default()
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(value={}, chart={:?})",
            self.0.value,
            self.chart()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (p, tol = DEFAULT_RANK_TOL))]
fn numerical_rank(p: &PyProbabilityMatrix, tol: f64) -> usize {
    core::numerical_rank(&p.0, tol)
}

#[pyfunction]
#[pyo3(signature = (p, tol = DEFAULT_COMBINATION_TOL))]
fn factorize_rank2(p: &PyProbabilityMatrix, tol: f64) -> PyResult<PyMixture> {
    core::factorize_rank2(&p.0, tol).map(PyMixture).map_err(err)
}

type ExtremalPair = ((usize, usize), Vec<(usize, f64, f64)>);

/// Returns the extremal column pair and `(j, t_j, s_j)` for the other columns.
#[pyfunction]
#[pyo3(signature = (p, tol = DEFAULT_COMBINATION_TOL))]
fn extremal_pair(p: &PyProbabilityMatrix, tol: f64) -> PyResult<ExtremalPair> {
    let (chart, comb) = core::extremal_pair(&p.0, tol).map_err(err)?;
    Ok((pair(chart), comb.coeffs))
}

#[pyfunction]
fn chart_forward(point: &PyChartPoint) -> PyResult<PyProbabilityMatrix> {
    core::chart_forward(&point.0)
        .map(PyProbabilityMatrix)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (chart, p, tol = DEFAULT_COMBINATION_TOL))]
fn chart_inverse(
    chart: (usize, usize),
    p: &PyProbabilityMatrix,
    tol: f64,
) -> PyResult<PyChartPoint> {
    core::chart_inverse(chart_id(chart)?, &p.0, tol)
        .map(PyChartPoint)
        .map_err(err)
}

/// Every chart whose inverse applies, with the inverse branch used.
#[pyfunction]
#[pyo3(signature = (p, tol = DEFAULT_COMBINATION_TOL))]
fn select_charts(p: &PyProbabilityMatrix, tol: f64) -> PyResult<Vec<((usize, usize), String)>> {
    let sel = core::select_charts(&p.0, tol).map_err(err)?;
    Ok(sel
        .iter()
        .map(|s| (pair(s.chart), snake(&s.branch)))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (point, tol = DEFAULT_CLASSIFY_TOL))]
fn classify(point: &PyChartPoint, tol: f64) -> PyResult<Vec<String>> {
    let flags = core::classify(&point.0, tol).map_err(err)?;
    Ok(flags.iter().map(snake).collect())
}

#[pyfunction]
#[pyo3(signature = (point, step = DEFAULT_FD_STEP))]
fn jacobian(point: &PyChartPoint, step: f64) -> PyResult<Vec<Vec<f64>>> {
    let j = core::jacobian(&point.0, step).map_err(err)?;
    Ok((0..j.nrows())
        .map(|r| j.row(r).iter().copied().collect())
        .collect())
}

#[pyfunction]
fn loglikelihood(table: &PyContingencyTable, p: &PyProbabilityMatrix) -> PyResult<f64> {
    core::loglikelihood(&table.0, &p.0).map_err(err)
}

#[pyfunction]
fn mle_rank1(table: &PyContingencyTable) -> PyResult<PyProbabilityMatrix> {
    core::mle_rank1(&table.0)
        .map(PyProbabilityMatrix)
        .map_err(err)
}

#[pyfunction]
fn fit_rank1(table: &PyContingencyTable) -> PyResult<PyFitResult> {
    core::optimize::fit_rank1(&table.0)
        .map(PyFitResult)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (table, seed = 0, multistarts = 16, max_iters = 500, grad_tol = 1e-8, fd_step = 1e-6))]
fn maximize_over_model(
    py: Python<'_>,
    table: &PyContingencyTable,
    seed: u64,
    multistarts: usize,
    max_iters: usize,
    grad_tol: f64,
    fd_step: f64,
) -> PyResult<PyFitResult> {
    let settings = OptimizerSettings {
        seed,
        multistarts,
        max_iters,
        grad_tol,
        fd_step,
        ..Default::default()
    };
    let t = table.0.clone();
    py.detach(move || core::maximize_over_model(&t, &settings))
        .map(PyFitResult)
        .map_err(err)
}

#[pyfunction]
fn sample_table(rep: &PyMixture, n: u64, seed: u64) -> PyContingencyTable {
    PyContingencyTable(core::sample_table(&rep.0, SampleSpec { n, seed }))
}

#[pymodule]
fn mixcharts(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MixchartsError", m.py().get_type::<MixchartsError>())?;
    m.add_class::<PyProbabilityMatrix>()?;
    m.add_class::<PyContingencyTable>()?;
    m.add_class::<PyMixture>()?;
    m.add_class::<PyChartPoint>()?;
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(numerical_rank, m)?)?;
    m.add_function(wrap_pyfunction!(factorize_rank2, m)?)?;
    m.add_function(wrap_pyfunction!(extremal_pair, m)?)?;
    m.add_function(wrap_pyfunction!(chart_forward, m)?)?;
    m.add_function(wrap_pyfunction!(chart_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(select_charts, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(loglikelihood, m)?)?;
    m.add_function(wrap_pyfunction!(mle_rank1, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rank1, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_over_model, m)?)?;
    m.add_function(wrap_pyfunction!(sample_table, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
