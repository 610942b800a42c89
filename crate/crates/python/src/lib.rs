//! Python bindings for the `catent` entropy toolkit.

use catent::linalg::CMatrix;
use catent::maxent::MaxEntProblem;
use catent::models::CovarianceMatrix;
use catent::transitions::TransitionPlan;
use catent::{Basis, DensityMatrix, Distribution, EntropyMeasure, LogBase, Subsystem, Tolerances};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(catent_py, CatentError, PyException);

fn err(e: catent::Error) -> PyErr {
    CatentError::new_err(e.to_string())
}

fn measure(label: &str) -> PyResult<EntropyMeasure> {
    label.parse::<EntropyMeasure>().map_err(err)
}

fn base(label: &str) -> PyResult<LogBase> {
    label.parse::<LogBase>().map_err(err)
}

fn complex_matrix(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> PyResult<CMatrix> {
    let n = re.len();
    if re.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("real part must be a square list of rows"));
    }
    if let Some(im) = im {
        if im.len() != n || im.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("imaginary part must match the real part's shape"));
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

fn to_lists(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn real_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Ok(DMatrix::from_fn(n, c, |i, j| rows[i][j]))
}

/// A validated density operator.
#[pyclass(name = "DensityMatrix", module = "catent_py", frozen)]
pub struct PyDensityMatrix {
    inner: DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    /// Build from real and optional imaginary parts given as lists of rows.
    #[new]
    #[pyo3(signature = (re, im = None, tol = None))]
    fn new(re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>, tol: Option<f64>) -> PyResult<Self> {
        let raw = complex_matrix(&re, im.as_deref())?;
        let tol = tol.map_or_else(Tolerances::default, Tolerances::uniform);
        let inner = DensityMatrix::with_tolerances(raw, &tol).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn maximally_mixed(dim: usize) -> Self {
        Self {
            inner: DensityMatrix::maximally_mixed(dim),
        }
    }

    #[staticmethod]
    fn from_diagonal(diag: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: DensityMatrix::from_diagonal(&diag).map_err(err)?,
        })
    }

    /// `Σ λ_i |j_i⟩⟨j_i|` for a spectrum and the basis holding the eigenvectors.
    #[staticmethod]
    fn from_spectrum(spectrum: Vec<f64>, basis: &PyBasis) -> PyResult<Self> {
        let p = Distribution::new(spectrum).map_err(err)?;
        Ok(Self {
            inner: DensityMatrix::from_spectrum(&p, &basis.inner).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Eigenvalues in descending order.
    fn spectrum(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.spectrum().map_err(err)?.into_vec())
    }

    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal()
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        to_lists(self.inner.matrix())
    }

    #[pyo3(signature = (measure = "vn", base = "2"))]
    fn entropy(&self, measure: &str, base: &str) -> PyResult<f64> {
        catent::entropy::quantum_entropy_in(&self.inner, &self::measure(measure)?, self::base(base)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dim={})", self.inner.dim())
    }
}

/// An orthonormal basis, stored as the columns of a unitary.
#[pyclass(name = "Basis", module = "catent_py", frozen)]
pub struct PyBasis {
    inner: Basis,
}

#[pymethods]
impl PyBasis {
    #[new]
    #[pyo3(signature = (re, im = None))]
    fn new(re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let raw = complex_matrix(&re, im.as_deref())?;
        Ok(Self {
            inner: Basis::new(raw).map_err(err)?,
        })
    }

    #[staticmethod]
    fn computational(dim: usize) -> Self {
        Self {
            inner: Basis::computational(dim),
        }
    }

    /// Haar-random basis from a seed.
    #[staticmethod]
    #[pyo3(signature = (dim, seed = 0))]
    fn haar(dim: usize, seed: u64) -> Self {
        Self {
            inner: catent::haar_basis(dim, seed),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        to_lists(self.inner.matrix())
    }

    fn __repr__(&self) -> String {
        format!("Basis(dim={})", self.inner.dim())
    }
}

/// Result of a transition constructor.
#[pyclass(name = "TransitionPlan", module = "catent_py", frozen)]
pub struct PyTransitionPlan {
    inner: TransitionPlan,
}

#[pymethods]
impl PyTransitionPlan {
    #[getter]
    fn source_spectrum(&self) -> Vec<f64> {
        self.inner.source_spectrum.probs().to_vec()
    }

    #[getter]
    fn target_spectrum(&self) -> Vec<f64> {
        self.inner.target_spectrum.probs().to_vec()
    }

    #[getter]
    fn ancilla_dims(&self) -> Vec<usize> {
        self.inner.ancilla_dims.clone()
    }

    #[getter]
    fn total_dim(&self) -> usize {
        self.inner.total_dim()
    }

    #[getter]
    fn residual_target(&self) -> f64 {
        self.inner.residual_target
    }

    #[getter]
    fn residual_marginal(&self) -> f64 {
        self.inner.residual_marginal
    }

    #[getter]
    fn success_probability(&self) -> Option<f64> {
        self.inner.success_probability
    }

    #[getter]
    fn levels(&self) -> Option<usize> {
        self.inner.levels
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn catalyst(&self) -> Option<PyDensityMatrix> {
        self.inner.catalyst.clone().map(|inner| PyDensityMatrix { inner })
    }

    fn unitary(&self) -> Vec<Vec<Complex64>> {
        to_lists(&self.inner.global_unitary)
    }

    fn __repr__(&self) -> String {
        format!(
            "TransitionPlan(total_dim={}, residual_target={:.3e}, residual_marginal={:.3e})",
            self.inner.total_dim(),
            self.inner.residual_target,
            self.inner.residual_marginal
        )
    }
}

#[pyfunction]
#[pyo3(signature = (p, measure = "vn", base = "2"))]
fn classical_entropy(p: Vec<f64>, measure: &str, base: &str) -> PyResult<f64> {
    let p = Distribution::new(p).map_err(err)?;
    catent::entropy::classical_entropy_in(&p, &self::measure(measure)?, self::base(base)?).map_err(err)
}

#[pyfunction]
fn dephase(rho: &PyDensityMatrix, basis: &PyBasis) -> PyResult<PyDensityMatrix> {
    Ok(PyDensityMatrix {
        inner: catent::dephase(&rho.inner, &basis.inner).map_err(err)?,
    })
}

#[pyfunction]
fn trace_distance(rho: &PyDensityMatrix, sigma: &PyDensityMatrix) -> PyResult<f64> {
    catent::trace_distance(&rho.inner, &sigma.inner).map_err(err)
}

/// Reduce a bipartite state with factor dimensions `dims`, keeping `"a"` or `"b"`.
#[pyfunction]
#[pyo3(signature = (rho, dims, keep = "a"))]
fn partial_trace(rho: &PyDensityMatrix, dims: (usize, usize), keep: &str) -> PyResult<PyDensityMatrix> {
    let keep = match keep {
        "a" | "A" => Subsystem::A,
        "b" | "B" => Subsystem::B,
        other => return Err(PyValueError::new_err(format!("keep must be 'a' or 'b', got {other:?}"))),
    };
    Ok(PyDensityMatrix {
        inner: catent::partial_trace(&rho.inner, dims, keep).map_err(err)?,
    })
}

#[pyfunction]
fn tensor(rho: &PyDensityMatrix, sigma: &PyDensityMatrix) -> PyDensityMatrix {
    PyDensityMatrix {
        inner: catent::tensor(&rho.inner, &sigma.inner),
    }
}

/// Returns `(holds, partial_sum_gaps)`.
#[pyfunction]
fn majorizes(p: Vec<f64>, q: Vec<f64>) -> PyResult<(bool, Vec<f64>)> {
    let p = Distribution::new(p).map_err(err)?;
    let q = Distribution::new(q).map_err(err)?;
    let cert = catent::majorizes(&p, &q);
    Ok((cert.holds, cert.partial_sum_gaps))
}

/// Sample bases and check the local (`"local"`) or joint (`"joint"`) dephasing principle.
#[pyfunction]
#[pyo3(signature = (rho, check = "local", measure = "vn", samples = 500, seed = 0))]
fn verify_principles<'py>(
    py: Python<'py>,
    rho: &PyDensityMatrix,
    check: &str,
    measure: &str,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = self::measure(measure)?;
    let report = match check {
        "local" => catent::verify_local_minimum(&rho.inner, &m, samples, seed),
        "joint" => catent::verify_joint_principles(&rho.inner, &m, samples, seed),
        other => return Err(PyValueError::new_err(format!("unknown check {other:?}"))),
    }
    .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("measure", &report.measure)?;
    out.set_item("s_rho", report.s_rho)?;
    out.set_item("eigenbasis_value", report.eigenbasis_value)?;
    out.set_item("sampled_min", report.sampled_min)?;
    out.set_item("sampled_max_cross", report.sampled_max_cross)?;
    out.set_item("achieved_at_eigenbasis", report.achieved_at_eigenbasis)?;
    out.set_item("n_samples", report.n_samples)?;
    out.set_item("passed", report.passed())?;
    let violations: Vec<(u64, String, f64)> = report
        .violations
        .iter()
        .map(|v| (v.seed, v.kind.clone(), v.value))
        .collect();
    out.set_item("violations", violations)?;
    Ok(out)
}

#[pyfunction]
fn noisy_transition(rho: &PyDensityMatrix, target: &PyDensityMatrix) -> PyResult<PyTransitionPlan> {
    Ok(PyTransitionPlan {
        inner: catent::construct_noisy_transition(&rho.inner, &target.inner).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (rho, target, padding = None))]
fn probabilistic_conversion(
    rho: &PyDensityMatrix,
    target: &PyDensityMatrix,
    padding: Option<usize>,
) -> PyResult<PyTransitionPlan> {
    Ok(PyTransitionPlan {
        inner: catent::probabilistic_conversion(&rho.inner, &target.inner, padding).map_err(err)?,
    })
}

/// Truncated `ε`-approximate transition between two finite spectra.
#[pyfunction]
#[pyo3(signature = (p, q, epsilon = 0.01))]
fn approx_transition(p: Vec<f64>, q: Vec<f64>, epsilon: f64) -> PyResult<PyTransitionPlan> {
    let p = Distribution::new(p).map_err(err)?;
    let q = Distribution::new(q).map_err(err)?;
    Ok(PyTransitionPlan {
        inner: catent::approx_transition_truncated(&p, &q, epsilon, None).map_err(err)?,
    })
}

/// Maximum-entropy latent spectrum; `alpha[i][j]` is the overlap of eigenvector `i`
/// with measurement outcome `j`.
#[pyfunction]
#[pyo3(signature = (q, alpha, measure = "vn", relaxed = false, tol = 1e-10))]
fn maxent<'py>(
    py: Python<'py>,
    q: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    measure: &str,
    relaxed: bool,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let q = Distribution::new(q).map_err(err)?;
    let prob = MaxEntProblem::new(q, alpha, self::measure(measure)?).map_err(err)?;
    let sol = if relaxed {
        catent::solve_maxent_relaxed(&prob)
    } else {
        catent::solve_maxent_full(&prob, tol)
    }
    .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("p", sol.p.probs().to_vec())?;
    out.set_item("multipliers", &sol.multipliers)?;
    out.set_item("objective", sol.objective)?;
    out.set_item("converged", sol.converged)?;
    out.set_item("residuals", &sol.residuals)?;
    Ok(out)
}

/// Fidelity of the best rate-`rate` block code on `n` copies of a (diagonal) state.
#[pyfunction]
fn typical_subspace_fidelity(rho: &PyDensityMatrix, n: usize, rate: f64) -> PyResult<(f64, f64)> {
    let r = catent::typical_subspace_fidelity(&rho.inner, n, rate).map_err(err)?;
    Ok((r.fidelity, r.kept_dimension_log2))
}

/// Entropy of the truncated thermal state for each number of levels, as `(levels, entropy, deficit)`.
#[pyfunction]
#[pyo3(signature = (nbar, levels, measure = "vn"))]
fn thermal_entropy(nbar: f64, levels: Vec<usize>, measure: &str) -> PyResult<Vec<(usize, f64, f64)>> {
    let conv = catent::thermal_entropy_convergence(nbar, &levels, &self::measure(measure)?).map_err(err)?;
    Ok(conv.rows.iter().map(|r| (r.levels, r.entropy, r.deficit)).collect())
}

/// Ascending symplectic eigenvalues of a covariance matrix (vacuum = identity).
#[pyfunction]
fn symplectic_eigenvalues(cov: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    CovarianceMatrix::new(real_matrix(&cov)?)
        .and_then(|c| c.symplectic_eigenvalues())
        .map_err(err)
}

/// Covariance matrix after mixing a one-mode state with vacuum at transmissivity `lam`.
#[pyfunction]
fn beamsplitter(cov: Vec<Vec<f64>>, lam: f64) -> PyResult<Vec<Vec<f64>>> {
    let cov = CovarianceMatrix::new(real_matrix(&cov)?).map_err(err)?;
    let out = catent::beamsplitter_covariance(&cov, lam).map_err(err)?;
    let m = out.matrix();
    Ok((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
}

/// Central-spin entropies at time `t`: `(s_exact, s_dephased, x_decay)`.
#[pyfunction]
fn spin_cluster(omega: Vec<Vec<f64>>, t: f64) -> PyResult<(f64, f64, f64)> {
    let cfg = catent::SpinClusterConfig::new(omega, t).map_err(err)?;
    let dim = 1 << cfg.m;
    let r = catent::spin_cluster_entropy(&cfg, &Basis::computational(dim)).map_err(err)?;
    Ok((r.s_exact, r.s_dephased, r.x_decay))
}

#[pymodule]
fn catent_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CatentError", m.py().get_type::<CatentError>())?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyBasis>()?;
    m.add_class::<PyTransitionPlan>()?;
    m.add_function(wrap_pyfunction!(classical_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(dephase, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(partial_trace, m)?)?;
    m.add_function(wrap_pyfunction!(tensor, m)?)?;
    m.add_function(wrap_pyfunction!(majorizes, m)?)?;
    m.add_function(wrap_pyfunction!(verify_principles, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_transition, m)?)?;
    m.add_function(wrap_pyfunction!(probabilistic_conversion, m)?)?;
    m.add_function(wrap_pyfunction!(approx_transition, m)?)?;
    m.add_function(wrap_pyfunction!(maxent, m)?)?;
    m.add_function(wrap_pyfunction!(typical_subspace_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(beamsplitter, m)?)?;
    m.add_function(wrap_pyfunction!(spin_cluster, m)?)?;
    Ok(())
}
