//! Python bindings: basis evaluation, ℓ1 recovery, and the adaptive benchmark
//! sweep. Matrices are passed as lists of rows.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mwsparse::adapt::{PartitionTree, Sampling};
use mwsparse::bench::{self, ExperimentConfig, ReportRow};
use mwsparse::csolve;
use mwsparse::models::model_by_name;
use mwsparse::mwbasis::{BasisKind, MwBasis};
use mwsparse::{tensor, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Contract(_) | Error::Domain { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Scaling functions and multi-wavelets of order `n0` on `[0, 1]`.
#[pyclass(name = "Basis", frozen)]
struct PyBasis {
    inner: MwBasis,
}

#[pymethods]
impl PyBasis {
    #[new]
    fn new(n0: usize) -> PyResult<Self> {
        Ok(PyBasis {
            inner: MwBasis::new(n0).map_err(to_py)?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn scaling(&self, i: usize, x: f64) -> PyResult<f64> {
        self.eval(BasisKind::Scaling, i, x)
    }

    fn wavelet(&self, i: usize, x: f64) -> PyResult<f64> {
        self.eval(BasisKind::Wavelet, i, x)
    }

    /// Text dump of both families.
    fn dump(&self) -> String {
        self.inner.scaling.dump() + &self.inner.wavelets.dump()
    }
}

impl PyBasis {
    fn eval(&self, kind: BasisKind, i: usize, x: f64) -> PyResult<f64> {
        if i > self.inner.order() {
            return Err(PyValueError::new_err(format!("member {i} exceeds order {}", self.inner.order())));
        }
        Ok(self.inner.function(kind, i).eval(x))
    }
}

/// Size of the local scaling plus detail basis.
#[pyfunction]
fn basis_size(n0: usize, n: usize) -> usize {
    tensor::basis_size(n0, n)
}

/// Minimum ℓ1 norm solution of `A c = b`.
#[pyfunction]
#[pyo3(signature = (a, b, tol = 1e-9, max_iter = 20_000))]
fn basis_pursuit(a: Vec<Vec<f64>>, b: Vec<f64>, tol: f64, max_iter: usize) -> PyResult<Vec<f64>> {
    let a = matrix(&a)?;
    let r = csolve::basis_pursuit(&a, &DVector::from_vec(b), tol, max_iter).map_err(to_py)?;
    Ok(r.coefficients)
}

/// Minimum ℓ1 norm solution with `‖A c − b‖₂ ≤ delta`.
#[pyfunction]
#[pyo3(signature = (a, b, delta, tol = 1e-9, max_iter = 20_000))]
fn basis_pursuit_denoise(a: Vec<Vec<f64>>, b: Vec<f64>, delta: f64, tol: f64, max_iter: usize) -> PyResult<Vec<f64>> {
    let a = matrix(&a)?;
    let r = csolve::basis_pursuit_denoise(&a, &DVector::from_vec(b), delta, tol, max_iter).map_err(to_py)?;
    Ok(r.coefficients)
}

#[pyfunction]
fn rip_constant(a: Vec<Vec<f64>>, s: usize) -> PyResult<f64> {
    csolve::rip_constant(&matrix(&a)?, s).map_err(to_py)
}

/// Evaluates a registered model at one point.
#[pyfunction]
fn evaluate(model: &str, x: Vec<f64>) -> PyResult<f64> {
    model_by_name(model).and_then(|m| m.evaluate(&x)).map_err(to_py)
}

/// Monte Carlo mean and variance of a registered model.
#[pyfunction]
#[pyo3(signature = (model, samples = 100_000, seed = 1))]
fn run_mc(py: Python<'_>, model: &str, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let m = model_by_name(model).map_err(to_py)?;
    let r = py.detach(|| bench::run_mc(m.as_ref(), samples, seed)).map_err(to_py)?;
    Ok((r.mean, r.variance))
}

/// Result of a sweep: one row and one surrogate per threshold.
#[pyclass(name = "Experiment", frozen)]
struct PyExperiment {
    rows: Vec<ReportRow>,
    trees: Vec<PartitionTree>,
    #[pyo3(get)]
    mc_mean: f64,
    #[pyo3(get)]
    mc_variance: f64,
}

#[pymethods]
impl PyExperiment {
    /// Report rows as dictionaries.
    #[getter]
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("c", r.c)?;
                d.set_item("n_sb", r.n_sb)?;
                d.set_item("mean", r.mean)?;
                d.set_item("variance", r.variance)?;
                d.set_item("mse", r.mse)?;
                d.set_item("model_evals", r.model_evals)?;
                d.set_item("wall_time_s", r.wall_time_s)?;
                Ok(d)
            })
            .collect()
    }

    /// Surrogate value of sweep row `row` at `x`.
    fn predict(&self, row: usize, x: Vec<f64>) -> PyResult<f64> {
        let tree = self
            .trees
            .get(row)
            .ok_or_else(|| PyValueError::new_err(format!("row {row} out of range")))?;
        tree.predict(&x).map_err(to_py)
    }

    /// Leaf bounds of sweep row `row`.
    fn leaves(&self, row: usize) -> PyResult<Vec<Vec<(f64, f64)>>> {
        let tree = self
            .trees
            .get(row)
            .ok_or_else(|| PyValueError::new_err(format!("row {row} out of range")))?;
        Ok(tree.leaves.iter().map(|l| l.part.bounds().to_vec()).collect())
    }

    fn results_csv(&self) -> String {
        bench::results_csv(&self.rows)
    }
}

#[pyfunction]
#[pyo3(signature = (
    model, n0, ns, cs, *, seed = 0, mc_samples = 100_000, mc_seed = 1,
    sampling = "uniform", epsilon = 1e-8, max_depth = 8, out = None, timing = true
))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    model: String,
    n0: usize,
    ns: usize,
    cs: Vec<f64>,
    seed: u64,
    mc_samples: usize,
    mc_seed: u64,
    sampling: &str,
    epsilon: f64,
    max_depth: u32,
    out: Option<PathBuf>,
    timing: bool,
) -> PyResult<PyExperiment> {
    let cfg = ExperimentConfig {
        model,
        n0,
        n_s: ns,
        cs,
        seed,
        mc_samples,
        mc_seed,
        sampling: sampling.parse::<Sampling>().map_err(to_py)?,
        epsilon,
        max_depth,
        out_dir: out,
        timing,
        ..Default::default()
    };
    let exp = py.detach(|| bench::run_experiment(&cfg)).map_err(to_py)?;
    Ok(PyExperiment {
        rows: exp.rows,
        trees: exp.trees,
        mc_mean: exp.mc.mean,
        mc_variance: exp.mc.variance,
    })
}

#[pymodule]
#[pyo3(name = "mwsparse")]
fn mwsparse_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(basis_size, m)?)?;
    m.add_function(wrap_pyfunction!(basis_pursuit, m)?)?;
    m.add_function(wrap_pyfunction!(basis_pursuit_denoise, m)?)?;
    m.add_function(wrap_pyfunction!(rip_constant, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_mc, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
