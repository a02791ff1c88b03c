//! Gradient-descent update rules preconditioned by the identity, the
//! Fubini-Study metric, the ITE Gram matrix or the classical Fisher metric,
//! and the iteration loop that records trajectories.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{
    asymmetry, classical_fisher_metric, fubini_study_metric, ite_matrix, MetricMatrix,
    DEFAULT_PROB_FLOOR,
};
use crate::observables::{
    energy, spectral_decompose, PauliHamiltonian, SpectralDecomposition, DEFAULT_DEGENERACY_TOL,
};
use crate::state::{build_state, derivative_states, AnsatzCircuit};

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Vanilla,
    /// Preconditioned by the Fubini-Study metric.
    NaturalFS,
    /// Preconditioned by `A_ij = Re⟨∂_iφ|∂_jφ⟩`.
    Ite,
    /// Preconditioned by the classical Fisher metric of measuring `H`.
    NaturalClassical,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::Vanilla,
        OptimizerKind::NaturalFS,
        OptimizerKind::Ite,
        OptimizerKind::NaturalClassical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Vanilla => "vanilla",
            OptimizerKind::NaturalFS => "natural",
            OptimizerKind::Ite => "ite",
            OptimizerKind::NaturalClassical => "classical",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vanilla" | "gradient" => Ok(OptimizerKind::Vanilla),
            "natural" | "natural-fs" | "fs" => Ok(OptimizerKind::NaturalFS),
            "ite" => Ok(OptimizerKind::Ite),
            "classical" | "natural-classical" => Ok(OptimizerKind::NaturalClassical),
            other => Err(Error::InvalidSetting(format!(
                "unknown optimizer {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRateSchedule {
    Constant(f64),
    /// `c / k` for the k-th update, counting updates from 1.
    InverseStep(f64),
}

impl LearningRateSchedule {
    /// Rate for the update that leaves record `k` (0-based).
    pub fn rate(&self, k: usize) -> f64 {
        match *self {
            LearningRateSchedule::Constant(eta) => eta,
            LearningRateSchedule::InverseStep(c) => c / (k + 1) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            LearningRateSchedule::Constant(v) | LearningRateSchedule::InverseStep(v) => v,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidSetting(format!(
                "learning rate must be positive, got {v}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizationPolicy {
    /// `(M + εI)⁻¹ g`
    Tikhonov(f64),
    /// Eigenvalues below ε are raised to ε before inverting.
    EigenFloor(f64),
    /// Eigenpairs below `cut · σ_max` are dropped.
    PseudoInverse(f64),
}

impl Default for RegularizationPolicy {
    fn default() -> Self {
        RegularizationPolicy::EigenFloor(1e-10)
    }
}

impl RegularizationPolicy {
    fn validate(&self) -> Result<()> {
        let v = match *self {
            RegularizationPolicy::Tikhonov(v)
            | RegularizationPolicy::EigenFloor(v)
            | RegularizationPolicy::PseudoInverse(v) => v,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidSetting(format!(
                "regularization strength must be positive, got {v}"
            )));
        }
        Ok(())
    }
}

/// Solves `M x = g` for a symmetric PSD metric under `policy`.
pub fn solve_regularized(
    metric: &MetricMatrix,
    gradient: &[f64],
    policy: RegularizationPolicy,
) -> Result<Vec<f64>> {
    policy.validate()?;
    let m = &metric.values;
    if m.nrows() != gradient.len() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: gradient.len(),
            context: "gradient length vs metric",
        });
    }
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let g = DVector::from_column_slice(gradient);
    let x = match policy {
        RegularizationPolicy::Tikhonov(eps) => {
            let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * eps;
            shifted.lu().solve(&g).ok_or(Error::NonFiniteSolution)?
        }
        RegularizationPolicy::EigenFloor(eps) => {
            spectral_solve(m, &g, |sigma, _| Some(sigma.max(eps)))
        }
        RegularizationPolicy::PseudoInverse(cut) => {
            spectral_solve(m, &g, |sigma, max| (sigma >= cut * max).then_some(sigma))
        }
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSolution);
    }
    Ok(x.iter().copied().collect())
}

/// `Σ_i v_i (v_iᵀ g) / σ'_i` where `adjust` maps each eigenvalue to the one
/// used for inversion, or drops it.
fn spectral_solve(
    m: &DMatrix<f64>,
    g: &DVector<f64>,
    adjust: impl Fn(f64, f64) -> Option<f64>,
) -> DVector<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let mut x = DVector::zeros(g.len());
    for (i, &sigma) in eig.eigenvalues.iter().enumerate() {
        if let Some(s) = adjust(sigma, max) {
            let v = eig.eigenvectors.column(i);
            x += v * (v.dot(g) / s);
        }
    }
    x
}

/// A Hamiltonian paired with an ansatz, plus the spectral data needed by the
/// classical Fisher metric.
#[derive(Debug, Clone)]
pub struct Problem {
    pub hamiltonian: PauliHamiltonian,
    pub circuit: AnsatzCircuit,
    pub decomposition: SpectralDecomposition,
    pub prob_floor: f64,
}

impl Problem {
    pub fn new(hamiltonian: PauliHamiltonian, circuit: AnsatzCircuit) -> Result<Self> {
        if hamiltonian.n_qubits() != circuit.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: circuit.n_qubits(),
                actual: hamiltonian.n_qubits(),
                context: "hamiltonian qubits vs circuit qubits",
            });
        }
        let decomposition = spectral_decompose(&hamiltonian, DEFAULT_DEGENERACY_TOL);
        Ok(Self {
            hamiltonian,
            circuit,
            decomposition,
            prob_floor: DEFAULT_PROB_FLOOR,
        })
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    pub fn energy(&self, theta: &[f64]) -> Result<f64> {
        energy(&self.hamiltonian, &build_state(&self.circuit, theta)?)
    }

    /// Energy and its exact gradient from one state evaluation.
    pub fn energy_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let state = build_state(&self.circuit, theta)?;
        let h_state = self.hamiltonian.apply(&state)?;
        let e = energy(&self.hamiltonian, &state)?;
        let grad = derivative_states(&self.circuit, theta)?
            .iter()
            .map(|d| 2.0 * d.inner(&h_state).re)
            .collect();
        Ok((e, grad))
    }

    /// The preconditioner used by `kind`; the identity for `Vanilla`.
    pub fn metric(&self, kind: OptimizerKind, theta: &[f64]) -> Result<MetricMatrix> {
        match kind {
            OptimizerKind::Vanilla => {
                self.circuit.check_params(theta)?;
                Ok(MetricMatrix::identity(self.n_params()))
            }
            OptimizerKind::NaturalFS => fubini_study_metric(&self.circuit, theta),
            OptimizerKind::Ite => ite_matrix(&self.circuit, theta),
            OptimizerKind::NaturalClassical => {
                classical_fisher_metric(&self.circuit, theta, &self.decomposition, self.prob_floor)
            }
        }
    }

    /// Metric reported in trajectory diagnostics. Plain gradient descent has
    /// no metric of its own, so it reports the Fubini-Study metric.
    fn diagnostic_metric(&self, kind: OptimizerKind, theta: &[f64]) -> Result<MetricMatrix> {
        match kind {
            OptimizerKind::Vanilla => fubini_study_metric(&self.circuit, theta),
            other => self.metric(other, theta),
        }
    }
}

fn update(
    kind: OptimizerKind,
    metric: &MetricMatrix,
    theta: &[f64],
    gradient: &[f64],
    eta: f64,
    policy: RegularizationPolicy,
) -> Result<Vec<f64>> {
    let direction = match kind {
        OptimizerKind::Vanilla => gradient.to_vec(),
        _ => solve_regularized(metric, gradient, policy)?,
    };
    Ok(theta
        .iter()
        .zip(direction)
        .map(|(t, d)| t - eta * d)
        .collect())
}

/// One update `θ − η M(θ)⁻¹ ∇f(θ)`.
pub fn step(
    problem: &Problem,
    kind: OptimizerKind,
    theta: &[f64],
    eta: f64,
    policy: RegularizationPolicy,
) -> Result<Vec<f64>> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidSetting(format!(
            "learning rate must be positive, got {eta}"
        )));
    }
    let (_, gradient) = problem.energy_and_gradient(theta)?;
    let metric = problem.metric(kind, theta)?;
    update(kind, &metric, theta, &gradient, eta, policy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub schedule: LearningRateSchedule,
    pub policy: RegularizationPolicy,
    pub max_steps: usize,
    /// Stop once the gradient norm falls below this; 0 disables the check.
    pub grad_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            schedule: LearningRateSchedule::Constant(0.05),
            policy: RegularizationPolicy::default(),
            max_steps: 300,
            grad_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub det_metric: f64,
    pub min_eig_metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalReason {
    MaxSteps,
    GradNormBelow(f64),
    NonFinite,
    /// The classical Fisher metric hit a degenerate distribution.
    MetricUndefined,
}

impl fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalReason::MaxSteps => write!(f, "MaxSteps"),
            TerminalReason::GradNormBelow(tol) => write!(f, "GradNormBelow({tol})"),
            TerminalReason::NonFinite => write!(f, "NonFinite"),
            TerminalReason::MetricUndefined => write!(f, "MetricUndefined"),
        }
    }
}

/// Record 0 is the initial point; record `k` holds θ after `k` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: OptimizerKind,
    pub steps: Vec<StepRecord>,
    pub terminal_reason: TerminalReason,
}

impl Trajectory {
    pub fn last(&self) -> &StepRecord {
        self.steps.last().expect("trajectory has an initial record")
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.energy)
    }

    /// Index of the first record with `energy ≤ level`.
    pub fn first_at_or_below(&self, level: f64) -> Option<usize> {
        self.steps.iter().position(|s| s.energy <= level)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn run(
    problem: &Problem,
    kind: OptimizerKind,
    theta0: &[f64],
    options: &RunOptions,
) -> Result<Trajectory> {
    if options.max_steps == 0 {
        return Err(Error::InvalidSetting("max_steps must be at least 1".into()));
    }
    options.schedule.validate()?;
    options.policy.validate()?;
    problem.circuit.check_params(theta0)?;

    let mut steps = Vec::with_capacity(options.max_steps + 1);
    let mut theta = theta0.to_vec();
    let terminal_reason = loop {
        let k = steps.len();
        if theta.iter().any(|t| !t.is_finite()) {
            steps.push(StepRecord {
                k,
                theta,
                energy: f64::NAN,
                grad_norm: f64::NAN,
                det_metric: f64::NAN,
                min_eig_metric: f64::NAN,
            });
            break TerminalReason::NonFinite;
        }
        let (e, gradient) = problem.energy_and_gradient(&theta)?;
        let grad_norm = norm(&gradient);
        let diagnostic = problem.diagnostic_metric(kind, &theta);
        let (det_metric, min_eig_metric) = match &diagnostic {
            Ok(m) => (m.determinant(), m.eigenvalues()[0]),
            Err(_) => (f64::NAN, f64::NAN),
        };
        steps.push(StepRecord {
            k,
            theta: theta.clone(),
            energy: e,
            grad_norm,
            det_metric,
            min_eig_metric,
        });
        if !e.is_finite() || !grad_norm.is_finite() {
            break TerminalReason::NonFinite;
        }
        if k == options.max_steps {
            break TerminalReason::MaxSteps;
        }
        if grad_norm < options.grad_tol {
            break TerminalReason::GradNormBelow(options.grad_tol);
        }
        let metric = match (kind, diagnostic) {
            (OptimizerKind::Vanilla, _) => MetricMatrix::identity(theta.len()),
            (_, Ok(m)) => m,
            (_, Err(Error::DegenerateDistribution)) => break TerminalReason::MetricUndefined,
            (_, Err(e)) => return Err(e),
        };
        match update(
            kind,
            &metric,
            &theta,
            &gradient,
            options.schedule.rate(k),
            options.policy,
        ) {
            Ok(next) => theta = next,
            Err(Error::NonFiniteSolution) => break TerminalReason::NonFinite,
            Err(e) => return Err(e),
        }
    };
    Ok(Trajectory {
        kind,
        steps,
        terminal_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricKind;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn qubit_problem() -> Problem {
        Problem::new(PauliHamiltonian::sigma_x(), AnsatzCircuit::single_qubit()).unwrap()
    }

    fn metric(values: &[f64]) -> MetricMatrix {
        let n = (values.len() as f64).sqrt() as usize;
        MetricMatrix::new(
            MetricKind::FubiniStudy,
            DMatrix::from_row_slice(n, n, values),
        )
        .unwrap()
    }

    #[test]
    fn identity_metric_returns_gradient() {
        let g = [0.3, -1.7, 2.5];
        for policy in [
            RegularizationPolicy::Tikhonov(1e-14),
            RegularizationPolicy::EigenFloor(1e-10),
            RegularizationPolicy::PseudoInverse(1e-9),
        ] {
            let x = solve_regularized(&MetricMatrix::identity(3), &g, policy).unwrap();
            for (a, b) in x.iter().zip(g) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_examples() {
        let x = solve_regularized(
            &metric(&[1.0, 0.0, 0.0, 0.25]),
            &[1.5, -0.5],
            RegularizationPolicy::Tikhonov(1e-14),
        )
        .unwrap();
        assert!(
            (x[0] - 1.5).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12,
            "{x:?}"
        );

        let x = solve_regularized(
            &metric(&[1.0, 0.0, 0.0, 0.0]),
            &[1.0, 1.0],
            RegularizationPolicy::EigenFloor(1e-3),
        )
        .unwrap();
        assert!(
            (x[0] - 1.0).abs() < 1e-12 && (x[1] - 1000.0).abs() < 1e-9,
            "{x:?}"
        );

        let x = solve_regularized(
            &metric(&[1.0, 0.0, 0.0, 0.0]),
            &[1.0, 1.0],
            RegularizationPolicy::PseudoInverse(1e-9),
        )
        .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12, "{x:?}");
    }

    #[test]
    fn solve_errors() {
        let m = metric(&[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            solve_regularized(&m, &[1.0], RegularizationPolicy::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(solve_regularized(&m, &[1.0, 1.0], RegularizationPolicy::EigenFloor(0.0)).is_err());
        let asym = MetricMatrix {
            kind: MetricKind::Ite,
            values: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            eigen_floor_applied: None,
        };
        assert!(matches!(
            solve_regularized(&asym, &[1.0, 1.0], RegularizationPolicy::default()),
            Err(Error::NotSymmetric(_))
        ));
        let nan = MetricMatrix {
            kind: MetricKind::Ite,
            values: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            eigen_floor_applied: None,
        };
        assert_eq!(
            solve_regularized(&nan, &[f64::NAN, 1.0], RegularizationPolicy::default()),
            Err(Error::NonFiniteSolution)
        );
    }

    #[test]
    fn step_examples() {
        let p = qubit_problem();
        let start = [PI / 12.0, PI / 12.0];
        let policy = RegularizationPolicy::default();
        let v = step(&p, OptimizerKind::Vanilla, &start, 0.05, policy).unwrap();
        assert!((v[0] - (PI / 12.0 - 0.075)).abs() < 1e-14);
        assert!((v[1] - (PI / 12.0 + 0.025)).abs() < 1e-14);
        assert!((v[0] - 0.18680).abs() < 1e-5 && (v[1] - 0.28680).abs() < 1e-5);
        let n = step(&p, OptimizerKind::NaturalFS, &start, 0.05, policy).unwrap();
        assert!((n[0] - (PI / 12.0 - 0.075)).abs() < 1e-13);
        assert!((n[1] - (PI / 12.0 + 0.1)).abs() < 1e-13);
        assert!((n[1] - 0.36180).abs() < 1e-5);
    }

    #[test]
    fn stationary_point_is_fixed() {
        let p = qubit_problem();
        let theta = [FRAC_PI_4, 0.0];
        for kind in [
            OptimizerKind::Vanilla,
            OptimizerKind::NaturalFS,
            OptimizerKind::Ite,
        ] {
            let next = step(&p, kind, &theta, 0.05, RegularizationPolicy::default()).unwrap();
            assert_eq!(next, theta.to_vec(), "{kind}");
        }
    }

    #[test]
    fn classical_run_stops_on_degenerate_distribution() {
        let p = qubit_problem();
        let t = run(
            &p,
            OptimizerKind::NaturalClassical,
            &[FRAC_PI_4, 0.0],
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(t.terminal_reason, TerminalReason::MetricUndefined);
        assert_eq!(t.steps.len(), 1);
        assert!(step(
            &p,
            OptimizerKind::NaturalClassical,
            &[FRAC_PI_4, 0.0],
            0.05,
            RegularizationPolicy::default()
        )
        .is_err());
    }

    #[test]
    fn run_bookkeeping() {
        let p = qubit_problem();
        let opts = RunOptions {
            max_steps: 25,
            ..RunOptions::default()
        };
        let t = run(&p, OptimizerKind::Vanilla, &[0.3, 0.2], &opts).unwrap();
        assert_eq!(t.terminal_reason, TerminalReason::MaxSteps);
        assert_eq!(t.steps.len(), 26);
        assert!(t.steps.iter().enumerate().all(|(i, s)| s.k == i));
        assert_eq!(t.steps[0].theta, vec![0.3, 0.2]);

        let opts = RunOptions {
            max_steps: 1000,
            grad_tol: 1e-6,
            ..RunOptions::default()
        };
        let t = run(&p, OptimizerKind::NaturalFS, &[0.3, 0.2], &opts).unwrap();
        assert_eq!(t.terminal_reason, TerminalReason::GradNormBelow(1e-6));
        assert!(t.last().grad_norm < 1e-6);
        assert!(t.steps.len() < 1001);

        assert!(run(&p, OptimizerKind::Vanilla, &[0.3], &opts).is_err());
        let zero = RunOptions {
            max_steps: 0,
            ..opts
        };
        assert!(run(&p, OptimizerKind::Vanilla, &[0.3, 0.2], &zero).is_err());
    }

    #[test]
    fn huge_rate_ends_non_finite() {
        let p = qubit_problem();
        let opts = RunOptions {
            schedule: LearningRateSchedule::Constant(1e308),
            max_steps: 50,
            ..RunOptions::default()
        };
        let t = run(&p, OptimizerKind::Vanilla, &[0.3, 0.2], &opts).unwrap();
        assert_eq!(t.terminal_reason, TerminalReason::NonFinite);
    }

    #[test]
    fn inverse_step_schedule() {
        let s = LearningRateSchedule::InverseStep(1.0);
        assert_eq!(s.rate(0), 1.0);
        assert_eq!(s.rate(3), 0.25);
        assert!(LearningRateSchedule::Constant(-0.1).validate().is_err());
    }

    #[test]
    fn parses_kinds() {
        for kind in OptimizerKind::ALL {
            assert_eq!(kind.name().parse::<OptimizerKind>().unwrap(), kind);
        }
        assert!("adam".parse::<OptimizerKind>().is_err());
    }
}
