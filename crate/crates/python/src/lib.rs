//! Python bindings: Hamiltonians, circuits, metric tensors and optimizer
//! runs, with matrices returned as nested lists.
//!
//! ```python
//! import vqe_natgrad as vn
//! p = vn.preset("qubit-a")
//! t = p.run("natural")
//! print(t.terminal_reason, t.energies[-1])
//! ```

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vqe_natgrad::experiments::{self, PresetName};
use vqe_natgrad::geometry::{DEFAULT_PROB_FLOOR, DEFAULT_RANK_TOL};
use vqe_natgrad::optimizers::RunOptions;
use vqe_natgrad::{
    AnsatzCircuit, Error, Gate, GateKind, LearningRateSchedule, MetricMatrix, OptimizerKind,
    PauliHamiltonian, Problem, RegularizationPolicy,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::DegenerateDistribution | Error::NonFiniteSolution | Error::ImaginaryResidue(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows(m: &MetricMatrix) -> Vec<Vec<f64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.values[(i, j)]).collect())
        .collect()
}

fn parse_kind(name: &str) -> PyResult<OptimizerKind> {
    name.parse().map_err(to_py)
}

/// Sum of weighted Pauli strings, e.g. `Hamiltonian([(0.4, "ZI"), (0.2, "XX")])`.
#[pyclass(name = "Hamiltonian", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHamiltonian {
    inner: PauliHamiltonian,
}

#[pymethods]
impl PyHamiltonian {
    #[new]
    fn new(terms: Vec<(f64, String)>) -> PyResult<Self> {
        let pairs: Vec<(f64, &str)> = terms.iter().map(|(c, s)| (*c, s.as_str())).collect();
        Ok(Self {
            inner: PauliHamiltonian::from_pairs(&pairs).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn sigma_x() -> Self {
        Self {
            inner: PauliHamiltonian::sigma_x(),
        }
    }

    /// Two-qubit H₂ model with couplings α and β.
    #[staticmethod]
    #[pyo3(signature = (alpha=experiments::H2_ALPHA, beta=experiments::H2_BETA))]
    fn h2(alpha: f64, beta: f64) -> Self {
        Self {
            inner: PauliHamiltonian::h2(alpha, beta),
        }
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    /// `(coefficient, label)` pairs.
    #[getter]
    fn terms(&self) -> Vec<(f64, String)> {
        self.inner
            .terms()
            .iter()
            .map(|t| (t.coefficient, t.label()))
            .collect()
    }

    fn dense(&self) -> Vec<Vec<Complex64>> {
        let d = self.inner.dense();
        (0..d.nrows())
            .map(|i| (0..d.ncols()).map(|j| d[(i, j)]).collect())
            .collect()
    }

    /// Distinct eigenvalues, ascending.
    #[pyo3(signature = (tol=vqe_natgrad::observables::DEFAULT_DEGENERACY_TOL))]
    fn spectrum(&self, tol: f64) -> Vec<f64> {
        vqe_natgrad::spectral_decompose(&self.inner, tol).eigenvalues
    }

    fn __repr__(&self) -> String {
        let terms: Vec<String> = self
            .terms()
            .iter()
            .map(|(c, l)| format!("{c}*{l}"))
            .collect();
        format!("Hamiltonian({})", terms.join(" + "))
    }
}

/// Parametrized circuit. Gates are `(kind, targets, param_index)` with kind
/// `ry` or `phase` (parametrized) or `cnot`; `(\"unitary\", targets, matrix)`
/// takes a row-major list of complex entries.
#[pyclass(name = "Circuit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCircuit {
    inner: AnsatzCircuit,
}

#[derive(FromPyObject)]
enum GateSpec {
    Param(String, Vec<usize>, Option<usize>),
    Unitary(String, Vec<usize>, Vec<Complex64>),
}

#[pymethods]
impl PyCircuit {
    #[new]
    fn new(n_qubits: usize, gates: Vec<GateSpec>) -> PyResult<Self> {
        let gates = gates
            .into_iter()
            .map(|g| {
                let (kind, targets, index) = match g {
                    GateSpec::Param(name, targets, index) => {
                        let kind = match name.as_str() {
                            "ry" => GateKind::RyHalfAngleDoubled,
                            "phase" => GateKind::PhaseDoubled,
                            "cnot" => GateKind::Cnot,
                            other => {
                                return Err(PyValueError::new_err(format!(
                                    "unknown gate kind {other:?}"
                                )))
                            }
                        };
                        (kind, targets, index)
                    }
                    GateSpec::Unitary(name, targets, matrix) if name == "unitary" => {
                        (GateKind::FixedUnitary(matrix), targets, None)
                    }
                    GateSpec::Unitary(name, ..) => {
                        return Err(PyValueError::new_err(format!(
                            "gate {name:?} does not take a matrix"
                        )))
                    }
                };
                Gate::new(kind, targets, index).map_err(to_py)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: AnsatzCircuit::new(n_qubits, gates).map_err(to_py)?,
        })
    }

    /// `R_y` then phase on one qubit; parameters (θ1, θ2).
    #[staticmethod]
    fn single_qubit() -> Self {
        Self {
            inner: AnsatzCircuit::single_qubit(),
        }
    }

    /// Two-qubit hardware-efficient ansatz with four parameters.
    #[staticmethod]
    fn hardware_efficient_two_qubit() -> Self {
        Self {
            inner: AnsatzCircuit::hardware_efficient_two_qubit(),
        }
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    /// Amplitudes of the prepared state; qubit 0 is the most significant bit.
    fn state(&self, theta: Vec<f64>) -> PyResult<Vec<Complex64>> {
        Ok(vqe_natgrad::build_state(&self.inner, &theta)
            .map_err(to_py)?
            .amplitudes()
            .to_vec())
    }

    fn entanglement_entropy(&self, theta: Vec<f64>) -> PyResult<f64> {
        let state = vqe_natgrad::build_state(&self.inner, &theta).map_err(to_py)?;
        vqe_natgrad::entanglement_entropy(&state).map_err(to_py)
    }
}

/// Recorded optimizer run; per-step quantities are parallel lists.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    #[pyo3(get)]
    optimizer: String,
    #[pyo3(get)]
    terminal_reason: String,
    #[pyo3(get)]
    thetas: Vec<Vec<f64>>,
    #[pyo3(get)]
    energies: Vec<f64>,
    #[pyo3(get)]
    grad_norms: Vec<f64>,
    #[pyo3(get)]
    det_metric: Vec<f64>,
    #[pyo3(get)]
    min_eig_metric: Vec<f64>,
}

impl From<vqe_natgrad::Trajectory> for PyTrajectory {
    fn from(t: vqe_natgrad::Trajectory) -> Self {
        Self {
            optimizer: t.kind.name().to_string(),
            terminal_reason: t.terminal_reason.to_string(),
            thetas: t.steps.iter().map(|s| s.theta.clone()).collect(),
            energies: t.steps.iter().map(|s| s.energy).collect(),
            grad_norms: t.steps.iter().map(|s| s.grad_norm).collect(),
            det_metric: t.steps.iter().map(|s| s.det_metric).collect(),
            min_eig_metric: t.steps.iter().map(|s| s.min_eig_metric).collect(),
        }
    }
}

#[pymethods]
impl PyTrajectory {
    fn __len__(&self) -> usize {
        self.energies.len()
    }

    /// First step whose energy is at or below `level`.
    fn first_at_or_below(&self, level: f64) -> Option<usize> {
        self.energies.iter().position(|&e| e <= level)
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(optimizer={:?}, steps={}, final_energy={}, terminal_reason={:?})",
            self.optimizer,
            self.energies.len().saturating_sub(1),
            self.energies.last().copied().unwrap_or(f64::NAN),
            self.terminal_reason
        )
    }
}

fn run_options(
    eta: f64,
    steps: usize,
    schedule: &str,
    regularization: &str,
    reg_eps: f64,
    grad_tol: f64,
) -> PyResult<RunOptions> {
    let schedule = match schedule {
        "constant" => LearningRateSchedule::Constant(eta),
        "inverse-step" => LearningRateSchedule::InverseStep(eta),
        other => return Err(PyValueError::new_err(format!("unknown schedule {other:?}"))),
    };
    schedule.validate().map_err(to_py)?;
    let policy = match regularization {
        "eigen-floor" => RegularizationPolicy::EigenFloor(reg_eps),
        "tikhonov" => RegularizationPolicy::Tikhonov(reg_eps),
        "pinv" => RegularizationPolicy::PseudoInverse(reg_eps),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown regularization {other:?}"
            )))
        }
    };
    Ok(RunOptions {
        schedule,
        policy,
        max_steps: steps,
        grad_tol,
    })
}

/// A built-in experiment: Hamiltonian, circuit, start point and defaults.
#[pyclass(name = "Preset", frozen)]
struct PyPreset {
    inner: experiments::Preset,
}

#[pymethods]
impl PyPreset {
    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name.as_str()
    }

    #[getter]
    fn description(&self) -> &'static str {
        self.inner.name.description()
    }

    #[getter]
    fn hamiltonian(&self) -> PyHamiltonian {
        PyHamiltonian {
            inner: self.inner.hamiltonian.clone(),
        }
    }

    #[getter]
    fn circuit(&self) -> PyCircuit {
        PyCircuit {
            inner: self.inner.circuit.clone(),
        }
    }

    #[getter]
    fn theta0(&self) -> Vec<f64> {
        self.inner.theta0.clone()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn max_steps(&self) -> usize {
        self.inner.max_steps
    }

    #[getter]
    fn reference_energy(&self) -> f64 {
        self.inner.reference_energy
    }

    /// Run one optimizer with the preset's defaults, optionally overriding
    /// the step count or learning rate.
    #[pyo3(signature = (optimizer, steps=None, eta=None))]
    fn run(
        &self,
        py: Python<'_>,
        optimizer: &str,
        steps: Option<usize>,
        eta: Option<f64>,
    ) -> PyResult<PyTrajectory> {
        let kind = parse_kind(optimizer)?;
        let mut opts = self.inner.run_options();
        if let Some(s) = steps {
            opts.max_steps = s;
        }
        if let Some(e) = eta {
            opts.schedule = LearningRateSchedule::Constant(e);
            opts.schedule.validate().map_err(to_py)?;
        }
        let problem = self.inner.problem();
        let theta0 = &self.inner.theta0;
        let t = py
            .detach(|| vqe_natgrad::run(&problem, kind, theta0, &opts))
            .map_err(to_py)?;
        Ok(t.into())
    }

    /// Steps each optimizer needs to come within `threshold` of the
    /// reference energy (`None` if it never does).
    #[pyo3(signature = (optimizers, threshold=experiments::DEFAULT_THRESHOLD))]
    fn compare(
        &self,
        py: Python<'_>,
        optimizers: Vec<String>,
        threshold: f64,
    ) -> PyResult<Vec<(String, Option<usize>)>> {
        let kinds = optimizers
            .iter()
            .map(|o| parse_kind(o))
            .collect::<PyResult<Vec<_>>>()?;
        let report = py
            .detach(|| experiments::compare(&self.inner, &kinds, threshold))
            .map_err(to_py)?;
        Ok(report
            .results
            .iter()
            .map(|r| (r.kind.name().to_string(), r.steps_to_threshold))
            .collect())
    }
}

#[pyfunction]
fn preset(name: &str) -> PyResult<PyPreset> {
    Ok(PyPreset {
        inner: experiments::load_preset(name).map_err(to_py)?,
    })
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PresetName::ALL.iter().map(|p| p.as_str()).collect()
}

#[pyfunction]
fn fubini_study_metric(circuit: &PyCircuit, theta: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(
        &vqe_natgrad::fubini_study_metric(&circuit.inner, &theta).map_err(to_py)?,
    ))
}

#[pyfunction]
fn ite_matrix(circuit: &PyCircuit, theta: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(
        &vqe_natgrad::ite_matrix(&circuit.inner, &theta).map_err(to_py)?,
    ))
}

/// Classical Fisher metric of measuring `hamiltonian` in its eigenbasis.
#[pyfunction]
#[pyo3(signature = (circuit, theta, hamiltonian, prob_floor=DEFAULT_PROB_FLOOR))]
fn classical_fisher_metric(
    circuit: &PyCircuit,
    theta: Vec<f64>,
    hamiltonian: &PyHamiltonian,
    prob_floor: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let decomp = vqe_natgrad::spectral_decompose(
        &hamiltonian.inner,
        vqe_natgrad::observables::DEFAULT_DEGENERACY_TOL,
    );
    let m = vqe_natgrad::classical_fisher_metric(&circuit.inner, &theta, &decomp, prob_floor)
        .map_err(to_py)?;
    Ok(rows(&m))
}

/// `(determinant, min_eigenvalue, rank, is_singular)` of a symmetric matrix.
#[pyfunction]
#[pyo3(signature = (matrix, rank_tol=DEFAULT_RANK_TOL))]
fn singularity_report(matrix: Vec<Vec<f64>>, rank_tol: f64) -> PyResult<(f64, f64, usize, bool)> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let flat: Vec<f64> = matrix.into_iter().flatten().collect();
    let m = MetricMatrix::new(
        vqe_natgrad::MetricKind::Euclidean,
        nalgebra::DMatrix::from_row_slice(n, n, &flat),
    )
    .map_err(to_py)?;
    let r = vqe_natgrad::singularity_report(&m, rank_tol);
    Ok((r.determinant, r.min_eigenvalue, r.rank, r.is_singular))
}

#[pyfunction]
fn energy(hamiltonian: &PyHamiltonian, circuit: &PyCircuit, theta: Vec<f64>) -> PyResult<f64> {
    let state = vqe_natgrad::build_state(&circuit.inner, &theta).map_err(to_py)?;
    vqe_natgrad::energy(&hamiltonian.inner, &state).map_err(to_py)
}

#[pyfunction]
fn energy_gradient(
    hamiltonian: &PyHamiltonian,
    circuit: &PyCircuit,
    theta: Vec<f64>,
) -> PyResult<Vec<f64>> {
    vqe_natgrad::energy_gradient(&hamiltonian.inner, &circuit.inner, &theta).map_err(to_py)
}

/// Optimize `hamiltonian` over `circuit` from `theta0`.
#[pyfunction]
#[pyo3(signature = (
    hamiltonian, circuit, optimizer, theta0, eta=0.05, steps=300,
    schedule="constant", regularization="eigen-floor", reg_eps=1e-10, grad_tol=0.0
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    hamiltonian: &PyHamiltonian,
    circuit: &PyCircuit,
    optimizer: &str,
    theta0: Vec<f64>,
    eta: f64,
    steps: usize,
    schedule: &str,
    regularization: &str,
    reg_eps: f64,
    grad_tol: f64,
) -> PyResult<PyTrajectory> {
    let kind = parse_kind(optimizer)?;
    let opts = run_options(eta, steps, schedule, regularization, reg_eps, grad_tol)?;
    let problem = Problem::new(hamiltonian.inner.clone(), circuit.inner.clone()).map_err(to_py)?;
    let t = py
        .detach(|| vqe_natgrad::run(&problem, kind, &theta0, &opts))
        .map_err(to_py)?;
    Ok(t.into())
}

#[pymodule(name = "vqe_natgrad")]
fn vqe_natgrad_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyPreset>()?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(fubini_study_metric, m)?)?;
    m.add_function(wrap_pyfunction!(ite_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(classical_fisher_metric, m)?)?;
    m.add_function(wrap_pyfunction!(singularity_report, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(energy_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
