//! Python bindings for edgelab.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use edgelab::ensembles::{sample_covariance_factor, sample_sparse_wigner, symmetrize_covariance, EnsembleSample};
use edgelab::experiments::{run_experiment as run, ExperimentConfig};
use edgelab::io::{load_matrix_market, save_matrix_market};
use edgelab::limit_laws as ll;
use edgelab::spectral::{self, LanczosOptions};
use edgelab::tail_laws::{EntryDistribution, EntryLaw, TailLaw};
use edgelab::EdgeError;

fn py_err(e: EdgeError) -> PyErr {
    if e.is_internal() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for edgelab::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Entry law: uniform body with an exact power tail `P(|a| > x) = c x^-beta`
/// beyond the crossover point, or a standard Gaussian.
#[pyclass(name = "EntryLaw", module = "edgelab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEntryLaw {
    inner: EntryLaw,
}

#[pymethods]
impl PyEntryLaw {
    #[new]
    #[pyo3(signature = (c, beta, x0=None))]
    fn new(c: f64, beta: f64, x0: Option<f64>) -> PyResult<Self> {
        let law = match x0 {
            Some(x0) => TailLaw::crossover(c, beta, x0),
            None => TailLaw::with_default_crossover(c, beta),
        }
        .py()?;
        Ok(PyEntryLaw {
            inner: EntryLaw::Crossover(law),
        })
    }

    #[staticmethod]
    fn gaussian() -> Self {
        PyEntryLaw {
            inner: EntryLaw::Gaussian,
        }
    }

    fn survival(&self, x: f64) -> f64 {
        self.inner.survival(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn abs_moment(&self, k: u32) -> f64 {
        self.inner.abs_moment(k)
    }

    fn sample(&self, size: usize, seed: u64) -> Vec<f64> {
        let mut rng = edgelab::seeding::rng_from_seed(seed);
        (0..size).map(|_| self.inner.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Eigenvalues and, when requested, eigenvectors.
type Spectrum = (Vec<f64>, Option<Vec<Vec<f64>>>);

/// One ensemble realisation in sparse triplet form.
#[pyclass(name = "Ensemble", module = "edgelab_py", frozen)]
struct PyEnsemble {
    inner: EnsembleSample,
}

#[pymethods]
impl PyEnsemble {
    /// Diluted Wigner matrix with about `p_n` nonzeros per row (dense when `p_n >= n`).
    #[staticmethod]
    fn sparse_wigner(n: usize, p_n: f64, law: &PyEntryLaw, seed: u64) -> PyResult<Self> {
        Ok(PyEnsemble {
            inner: sample_sparse_wigner(n, p_n, &law.inner, seed).py()?,
        })
    }

    /// Raw `l x m` factor, or its `(l+m)`-square symmetrisation when `symmetrize`.
    #[staticmethod]
    #[pyo3(signature = (l, m, law, seed, symmetrize=true))]
    fn covariance(l: usize, m: usize, law: &PyEntryLaw, seed: u64, symmetrize: bool) -> PyResult<Self> {
        let s = sample_covariance_factor(l, m, &law.inner, seed).py()?;
        let inner = if symmetrize { symmetrize_covariance(&s).py()? } else { s };
        Ok(PyEnsemble { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyEnsemble {
            inner: load_matrix_market(&path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_matrix_market(&self.inner, &path).py()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows, self.inner.cols)
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    #[getter]
    fn symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    /// Stored `(row, col, value)` triplets; symmetric kinds keep `row <= col`.
    fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.inner.entries.iter().map(|t| (t.row, t.col, t.value)).collect()
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.inner.to_dense();
        (0..d.nrows()).map(|i| d.row(i).iter().copied().collect()).collect()
    }

    /// Top `k` eigenvalues, descending, with eigenvectors when requested.
    #[pyo3(signature = (k=1, tol=1e-10, vectors=false))]
    fn top_k(&self, py: Python<'_>, k: usize, tol: f64, vectors: bool) -> PyResult<Spectrum> {
        let opts = LanczosOptions {
            tol,
            want_vectors: vectors,
            seed: self.inner.seed,
            ..LanczosOptions::default()
        };
        let r = py.detach(|| spectral::top_k_eigs_with(&self.inner, k, &opts)).py()?;
        Ok((r.eigenvalues, r.eigenvectors))
    }
}

#[pyfunction]
fn f_bbp(x: f64) -> PyResult<f64> {
    ll::f_bbp(x).py()
}

#[pyfunction]
fn frechet_cdf(x: f64, c: f64, mu: f64) -> PyResult<f64> {
    ll::frechet_cdf(x, c, mu).py()
}

#[pyfunction]
fn lambda1_cdf(t: f64, c: f64, mu: f64) -> PyResult<f64> {
    ll::lambda1_cdf(t, c, mu).py()
}

#[pyfunction]
fn poisson_expected_count(c0: f64, c: f64, mu: f64) -> PyResult<f64> {
    ll::poisson_expected_count(c0, c, mu).py()
}

#[pyfunction]
fn mp_stieltjes(z: f64, alpha: f64) -> PyResult<f64> {
    ll::mp_stieltjes(z, alpha).py()
}

#[pyfunction]
fn f_alpha(x: f64, alpha: f64) -> PyResult<f64> {
    ll::f_alpha(x, alpha).py()
}

#[pyfunction]
fn tau_alpha(alpha: f64) -> PyResult<f64> {
    ll::tau_alpha(alpha).py()
}

#[pyfunction]
fn covariance_edge_cdf(t: f64, c: f64, alpha: f64) -> PyResult<f64> {
    ll::covariance_edge_cdf(t, c, alpha).py()
}

/// `(holds, site_i, site_j, overlap_sq, target)` for a unit vector `v`.
#[pyfunction]
fn localization_event(v: Vec<f64>, lam: f64, eps: f64) -> PyResult<(bool, usize, usize, f64, f64)> {
    let o = spectral::localization_event(&v, lam, eps).py()?;
    Ok((o.holds, o.site.0, o.site.1, o.overlap_sq, o.target))
}

/// Run a TOML experiment config; returns the manifest as a JSON string.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml_str(config).py()?;
    let m = py.detach(|| run(&cfg)).py()?;
    serde_json::to_string(&m).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn edgelab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEntryLaw>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(f_bbp, m)?)?;
    m.add_function(wrap_pyfunction!(frechet_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(lambda1_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_expected_count, m)?)?;
    m.add_function(wrap_pyfunction!(mp_stieltjes, m)?)?;
    m.add_function(wrap_pyfunction!(f_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(tau_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(covariance_edge_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(localization_event, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
