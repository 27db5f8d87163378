//! Python bindings for the `thermal_shadows` crate.

use std::str::FromStr;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use thermal_shadows as core;
use thermal_shadows::dense::{expectation, eig_hermitian, GibbsState};
use thermal_shadows::experiment::{run_to_bytes, Command, ExperimentConfig};
use thermal_shadows::pauli::{build_xxz, Couplings, PauliString};
use thermal_shadows::resources::{LoweringOptions, Target};
use thermal_shadows::shadow::{Bound as BudgetBound, StateSource};

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::NoConvergence { .. } | core::Error::DegreeCapExceeded { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: FromStr<Err = core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn words(observables: &[String]) -> PyResult<Vec<PauliString>> {
    observables.iter().map(|o| parse(o)).collect()
}

#[pyclass(module = "thermal_shadows")]
#[derive(Clone)]
struct Hamiltonian {
    inner: core::pauli::Hamiltonian,
}

#[pymethods]
impl Hamiltonian {
    /// Open Heisenberg chain; defaults are the reference couplings.
    #[staticmethod]
    #[pyo3(signature = (n, jx=1.1, jy=1.1, jz=1.0, hx=-1.0, hy=0.0, hz=0.0))]
    fn xxz(n: usize, jx: f64, jy: f64, jz: f64, hx: f64, hy: f64, hz: f64) -> PyResult<Self> {
        let c = Couplings { jx, jy, jz, hx, hy, hz };
        Ok(Self {
            inner: build_xxz(n, &c).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::pauli::Hamiltonian::from_json(s).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    /// `(coefficient, word)` pairs.
    fn terms(&self) -> Vec<(f64, String)> {
        self.inner.terms().iter().map(|t| (t.coeff, t.word.to_string())).collect()
    }

    fn one_norm(&self) -> f64 {
        self.inner.one_norm()
    }

    /// Ascending eigenvalues of the dense matrix.
    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        let s = eig_hermitian(&self.inner.matrix().map_err(err)?).map_err(err)?;
        let mut v = s.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Exact Gibbs expectations `Tr(rho O)` at inverse temperature `beta`.
    fn gibbs_expectations(&self, beta: f64, observables: Vec<String>) -> PyResult<Vec<f64>> {
        let rho = GibbsState::new(&self.inner, beta).map_err(err)?.density();
        words(&observables)?
            .iter()
            .map(|o| expectation(&rho, o).map_err(err))
            .collect()
    }

    fn gibbs_purity(&self, beta: f64) -> PyResult<f64> {
        Ok(GibbsState::new(&self.inner, beta).map_err(err)?.purity())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Hamiltonian(n={}, terms={})", self.inner.num_qubits(), self.inner.len())
    }
}

/// Every one- and two-local Pauli word on `n` qubits.
#[pyfunction]
fn observable_set(n: usize) -> PyResult<Vec<String>> {
    Ok(core::pauli::observable_set(n)
        .map_err(err)?
        .iter()
        .map(|w| w.to_string())
        .collect())
}

#[pyclass(module = "thermal_shadows", get_all)]
#[derive(Clone)]
struct SampleBudget {
    m: usize,
    s: usize,
    k: usize,
    n_s: usize,
    sigma2: f64,
}

impl SampleBudget {
    fn core(&self) -> PyResult<core::shadow::SampleBudget> {
        core::shadow::SampleBudget::from_sets(self.m, self.s, self.k).map_err(err)
    }
}

#[pymethods]
impl SampleBudget {
    #[new]
    fn new(m: usize, s: usize, k: usize) -> PyResult<Self> {
        let b = core::shadow::SampleBudget::from_sets(m, s, k).map_err(err)?;
        Ok(b.into())
    }

    fn __repr__(&self) -> String {
        format!("SampleBudget(m={}, s={}, k={}, n_s={})", self.m, self.s, self.k, self.n_s)
    }
}

impl From<core::shadow::SampleBudget> for SampleBudget {
    fn from(b: core::shadow::SampleBudget) -> Self {
        Self {
            m: b.m,
            s: b.s,
            k: b.k,
            n_s: b.n_s,
            sigma2: b.sigma2,
        }
    }
}

/// Set size and count for `m` observables of the given locality.
#[pyfunction]
#[pyo3(signature = (m, locality, epsilon, delta, bound="tight"))]
fn sample_budget(m: usize, locality: usize, epsilon: f64, delta: f64, bound: &str) -> PyResult<SampleBudget> {
    let b: BudgetBound = parse(bound)?;
    Ok(core::shadow::sample_budget(m, locality, epsilon, delta, b).map_err(err)?.into())
}

#[pyclass(module = "thermal_shadows")]
struct ThermalSampler {
    inner: core::shadow::ThermalSampler,
}

#[pymethods]
impl ThermalSampler {
    /// `source` is one of `exact-gibbs`, `exact-tpq`, `qsp-tpq`.
    #[new]
    #[pyo3(signature = (hamiltonian, beta, source="qsp-tpq", degree=24))]
    fn new(hamiltonian: &Hamiltonian, beta: f64, source: &str, degree: usize) -> PyResult<Self> {
        let src: StateSource = parse(source)?;
        Ok(Self {
            inner: core::shadow::ThermalSampler::new(&hamiltonian.inner, beta, src, Some(degree)).map_err(err)?,
        })
    }

    #[getter]
    fn source(&self) -> String {
        self.inner.source().to_string()
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    /// Median-of-means estimates, one per observable, in input order.
    fn estimate(&self, py: Python<'_>, observables: Vec<String>, budget: &SampleBudget, seed: u64) -> PyResult<Vec<f64>> {
        let obs = words(&observables)?;
        let b = budget.core()?;
        let est = py
            .allow_threads(|| core::shadow::run_experiment(&self.inner, &obs, &b, seed))
            .map_err(err)?;
        Ok(est.into_iter().map(|e| e.value).collect())
    }
}

#[pyclass(module = "thermal_shadows")]
struct MinimaxPoly {
    inner: core::minimax::MinimaxPoly,
}

#[pymethods]
impl MinimaxPoly {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    #[getter]
    fn achieved_error(&self) -> f64 {
        self.inner.achieved_error()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.inner.eval(x).map_err(err)
    }

    fn residual(&self, x: f64) -> PyResult<f64> {
        self.inner.residual(x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "MinimaxPoly(degree={}, tau={}, error={:e})",
            self.inner.degree(),
            self.inner.tau(),
            self.inner.achieved_error()
        )
    }
}

/// Minimax fit of `exp(-tau x)` on `domain`.
#[pyfunction]
#[pyo3(signature = (tau, degree, domain=(0.0, 1.0)))]
fn remez_fit(py: Python<'_>, tau: f64, degree: usize, domain: (f64, f64)) -> PyResult<MinimaxPoly> {
    let inner = py
        .allow_threads(|| core::minimax::remez_fit(tau, degree, domain))
        .map_err(err)?;
    Ok(MinimaxPoly { inner })
}

#[pyfunction]
#[pyo3(signature = (beta, threshold=1e-5))]
fn min_degree_for(py: Python<'_>, beta: f64, threshold: f64) -> PyResult<usize> {
    py.allow_threads(|| core::minimax::min_degree_for(beta, threshold)).map_err(err)
}

/// Gate counts per tag for the full circuit, as a list of dicts.
#[pyfunction]
#[pyo3(signature = (ns, degree=24, target="ft", seed=0, rotation_eps=1e-10))]
fn scaling_study<'py>(
    py: Python<'py>,
    ns: Vec<usize>,
    degree: usize,
    target: &str,
    seed: u64,
    rotation_eps: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let t: Target = parse(target)?;
    let opts = LoweringOptions { rotation_eps };
    let rows = py
        .allow_threads(|| core::resources::scaling_study(&ns, degree, t, &Couplings::default(), &opts, seed))
        .map_err(err)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new_bound(py);
            d.set_item("n", r.n)?;
            d.set_item("d", r.d)?;
            d.set_item("target", r.target)?;
            d.set_item("tag", r.tag)?;
            d.set_item("t_count", r.t_count)?;
            d.set_item("two_qubit_count", r.two_qubit_count)?;
            d.set_item("rotation_count", r.rotation_count)?;
            d.set_item("clifford_count", r.clifford_count)?;
            d.set_item("depth", r.depth)?;
            d.set_item("ancillae", r.ancillae)?;
            Ok(d)
        })
        .collect()
}

/// Depth statistics of lowered random unitaries.
#[pyfunction]
#[pyo3(signature = (n, samples=1000, target="nisq", seed=0))]
fn random_unitary_stats<'py>(
    py: Python<'py>,
    n: usize,
    samples: usize,
    target: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let t: Target = parse(target)?;
    let s = py
        .allow_threads(|| core::resources::random_unitary_stats(n, samples, t, seed))
        .map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("n", s.n)?;
    d.set_item("target", s.target)?;
    d.set_item("samples", s.samples)?;
    d.set_item("mean", s.mean)?;
    d.set_item("std", s.std)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    d.set_item("histogram", s.histogram)?;
    d.set_item("depths", s.depths)?;
    Ok(d)
}

/// Default experiment configuration as JSON.
#[pyfunction]
fn default_config() -> PyResult<String> {
    ExperimentConfig::default().to_json().map_err(err)
}

/// Runs an experiment command and returns its CSV output.
#[pyfunction]
#[pyo3(signature = (command, config=None))]
fn run(py: Python<'_>, command: &str, config: Option<&str>) -> PyResult<String> {
    let cmd: Command = parse(command)?;
    let cfg = match config {
        Some(s) => ExperimentConfig::from_json(s).map_err(err)?,
        None => ExperimentConfig::default(),
    };
    cfg.validate(cmd).map_err(err)?;
    let bytes = py.allow_threads(|| run_to_bytes(cmd, &cfg)).map_err(err)?;
    String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "thermal_shadows")]
fn thermal_shadows_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Hamiltonian>()?;
    m.add_class::<SampleBudget>()?;
    m.add_class::<ThermalSampler>()?;
    m.add_class::<MinimaxPoly>()?;
    m.add_function(wrap_pyfunction!(observable_set, m)?)?;
    m.add_function(wrap_pyfunction!(sample_budget, m)?)?;
    m.add_function(wrap_pyfunction!(remez_fit, m)?)?;
    m.add_function(wrap_pyfunction!(min_degree_for, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_study, m)?)?;
    m.add_function(wrap_pyfunction!(random_unitary_stats, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
