//! Python module `lptx`: grids, fields, multipliers, norms and the
//! experiment runner of `lptx-core`.

use lptx_core::verify::{self, Experiment, Settings};
use lptx_core::{grid, lpcalc, norms, Multiplier as CoreMultiplier};
use num_complex::Complex64;
use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: lptx_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Periodic n×n grid on the torus of side 2π.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Grid(grid::Grid);

#[pymethods]
impl Grid {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        grid::Grid::torus(n).map(Grid).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn k_max(&self) -> usize {
        self.0.k_max()
    }

    /// Physical coordinates of sample `(i, j)`.
    fn point(&self, i: usize, j: usize) -> (f64, f64) {
        self.0.point(i * self.0.n() + j)
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={})", self.0.n())
    }
}

/// Samples on a grid, stored row-major; `spectral` marks DFT coefficients.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Field(grid::Field);

#[pymethods]
impl Field {
    /// Builds a physical field from `n*n` real or complex samples.
    #[new]
    fn new(grid: &Grid, values: Vec<Complex64>) -> PyResult<Self> {
        grid::Field::from_values(&grid.0, grid::Space::Physical, values)
            .map(Field)
            .map_err(err)
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid(self.0.grid().clone())
    }

    #[getter]
    fn spectral(&self) -> bool {
        self.0.space() == grid::Space::Spectral
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.values().to_vec()
    }

    fn real(&self) -> Vec<f64> {
        self.0.real_parts()
    }

    fn forward(&self) -> PyResult<Field> {
        self.0.forward().map(Field).map_err(err)
    }

    fn inverse(&self) -> PyResult<Field> {
        self.0.inverse().map(Field).map_err(err)
    }

    fn __add__(&self, other: &Field) -> PyResult<Field> {
        self.0.add(&other.0).map(Field).map_err(err)
    }

    fn __sub__(&self, other: &Field) -> PyResult<Field> {
        self.0.sub(&other.0).map(Field).map_err(err)
    }

    fn __mul__(&self, s: f64) -> Field {
        Field(self.0.scale(s))
    }

    fn __rmul__(&self, s: f64) -> Field {
        Field(self.0.scale(s))
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }

    fn __repr__(&self) -> String {
        format!("Field(n={}, space={:?})", self.0.grid().n(), self.0.space())
    }
}

/// Fourier multiplier, e.g. `riesz(1,2)` or `smoothed_riesz(1,1)`.
#[pyclass(frozen)]
struct Multiplier(CoreMultiplier);

#[pymethods]
impl Multiplier {
    #[new]
    fn new(grid: &Grid, spec: &str) -> PyResult<Self> {
        CoreMultiplier::parse(&grid.0, spec).map(Multiplier).map_err(err)
    }

    #[getter]
    fn label(&self) -> &str {
        self.0.label()
    }

    fn symbol_bound(&self) -> f64 {
        self.0.symbol_bound()
    }

    fn apply(&self, f: &Field) -> PyResult<Field> {
        self.0.apply(&f.0).map(Field).map_err(err)
    }

    fn __call__(&self, f: &Field) -> PyResult<Field> {
        self.apply(f)
    }

    fn __repr__(&self) -> String {
        format!("Multiplier({:?})", self.0.label())
    }
}

/// `L^p` norm; pass `float("inf")` for the sup norm.
#[pyfunction]
fn lp_norm(f: &Field, p: f64) -> PyResult<f64> {
    norms::lp_norm(&f.0, p).map_err(err)
}

#[pyfunction]
fn sobolev_norm(f: &Field, s: f64) -> PyResult<f64> {
    norms::sobolev_norm(&f.0, s).map_err(err)
}

#[pyfunction]
fn besov_norm(f: &Field) -> PyResult<f64> {
    norms::besov_norm(&f.0).map_err(err)
}

#[pyfunction]
fn weak_l1(f: &Field) -> f64 {
    norms::weak_l1(&f.0)
}

#[pyfunction]
fn log_plus(x: f64) -> f64 {
    norms::log_plus(x)
}

/// `||f||_1 log+ ||f||_inf + 1`.
#[pyfunction]
fn n_of_field(f: &Field) -> PyResult<f64> {
    norms::n_of_field(&f.0).map_err(err)
}

/// Littlewood-Paley pieces as `[(k, P_k f), ...]`.
#[pyfunction]
fn decompose(f: &Field) -> PyResult<Vec<(usize, Field)>> {
    let pieces = lpcalc::decompose(&f.0).map_err(err)?;
    Ok(pieces.into_iter().map(|(k, p)| (k, Field(p))).collect())
}

#[pyfunction]
fn recompose(pieces: Vec<(usize, Field)>) -> PyResult<Field> {
    let pieces: Vec<(usize, grid::Field)> = pieces.into_iter().map(|(k, p)| (k, p.0)).collect();
    lpcalc::recompose(&pieces).map(Field).map_err(err)
}

#[pyfunction]
fn project_band(f: &Field, k: usize) -> PyResult<Field> {
    lpcalc::project_band(&f.0, k).map(Field).map_err(err)
}

#[pyfunction]
fn alpha_exponent(l: Vec<usize>, k: Vec<usize>) -> PyResult<f64> {
    verify::alpha_exponent(&l, &k).map_err(err)
}

/// `[(id, anchor, summary), ...]` for every experiment.
#[pyfunction]
fn experiments() -> Vec<(&'static str, &'static str, &'static str)> {
    Experiment::ALL.iter().map(|e| (e.id(), e.anchor(), e.summary())).collect()
}

/// Runs one experiment; keyword arguments use the config-file keys.
/// Returns the JSON summary (fits, checks, verdict, provenance) as a dict
/// whose `rows` entry lists each case keyed by parameter name.
#[pyfunction]
#[pyo3(signature = (experiment, **settings))]
fn run<'py>(
    py: Python<'py>,
    experiment: &str,
    settings: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let e: Experiment = experiment.parse().map_err(err)?;
    let json = py.import("json")?;
    let s: Settings = match settings {
        Some(kw) => {
            let text: String = json.call_method1("dumps", (kw,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyTypeError::new_err(e.to_string()))?
        }
        None => Settings::default(),
    };
    let report = py.detach(|| verify::run(e, &s)).map_err(err)?;
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|row| {
            let mut entry = serde_json::Map::new();
            for (name, p) in report.param_names.iter().zip(&row.params) {
                entry.insert(name.clone(), (*p).into());
            }
            entry.insert("lhs".into(), row.lhs.into());
            entry.insert("rhs".into(), row.rhs.into());
            entry.insert("ratio".into(), row.ratio.into());
            entry.into()
        })
        .collect();
    let mut summary = report.summary_json();
    summary["rows"] = rows.into();
    json.call_method1("loads", (summary.to_string(),))
}

#[pymodule]
fn lptx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Field>()?;
    m.add_class::<Multiplier>()?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_norm, m)?)?;
    m.add_function(wrap_pyfunction!(besov_norm, m)?)?;
    m.add_function(wrap_pyfunction!(weak_l1, m)?)?;
    m.add_function(wrap_pyfunction!(log_plus, m)?)?;
    m.add_function(wrap_pyfunction!(n_of_field, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(recompose, m)?)?;
    m.add_function(wrap_pyfunction!(project_band, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
