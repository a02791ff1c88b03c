//! Dense statevectors for parametrized circuits and their exact parameter
//! derivatives.
//!
//! Qubit 0 is the most significant bit of the basis index, so the two-qubit
//! basis order is |00⟩, |01⟩, |10⟩, |11⟩ with the first label on qubit 0.
//! Parametrized gates take the angle θ directly and double it internally:
//! `RyHalfAngleDoubled(θ)` is `exp(-iθσ_y)` and `PhaseDoubled(θ)` is
//! `diag(1, e^{2iθ})`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const UNITARITY_TOL: f64 = 1e-10;

/// Pure state of `n_qubits` qubits stored as `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state |0…0⟩.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                actual: amplitudes.len(),
                context: "amplitude count",
            });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from real amplitudes, normalizing them.
    pub fn from_real_normalized(n_qubits: usize, values: &[f64]) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let amps = values
            .iter()
            .map(|v| Complex64::new(v / norm, 0.0))
            .collect();
        Self::from_amplitudes(n_qubits, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies a `2^k × 2^k` row-major matrix to the listed target qubits.
    fn apply(&mut self, matrix: &[Complex64], targets: &[usize]) {
        let k = targets.len();
        let sub = 1usize << k;
        let n = self.n_qubits;
        let masks: Vec<usize> = targets.iter().map(|&q| 1 << (n - 1 - q)).collect();
        let target_mask: usize = masks.iter().sum();
        // Offsets of each local basis state; local bit 0 (MSB) is targets[0].
        let offsets: Vec<usize> = (0..sub)
            .map(|local| {
                masks
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| local & (1 << (k - 1 - j)) != 0)
                    .map(|(_, m)| m)
                    .sum()
            })
            .collect();
        let mut gathered = vec![Complex64::new(0.0, 0.0); sub];
        for base in 0..self.amplitudes.len() {
            if base & target_mask != 0 {
                continue;
            }
            for (g, off) in gathered.iter_mut().zip(&offsets) {
                *g = self.amplitudes[base + off];
            }
            for (row, off) in offsets.iter().enumerate() {
                self.amplitudes[base + off] = (0..sub)
                    .map(|col| matrix[row * sub + col] * gathered[col])
                    .sum();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// `exp(-iθσ_y)`, i.e. the usual `R_y(2θ)`.
    RyHalfAngleDoubled,
    /// `diag(1, e^{2iθ})`.
    PhaseDoubled,
    /// Control is `targets[0]`, target is `targets[1]`.
    Cnot,
    /// Explicit row-major unitary acting on the listed targets.
    FixedUnitary(Vec<Complex64>),
}

impl GateKind {
    pub fn is_parametrized(&self) -> bool {
        matches!(self, GateKind::RyHalfAngleDoubled | GateKind::PhaseDoubled)
    }

    fn arity(&self) -> Option<usize> {
        match self {
            GateKind::RyHalfAngleDoubled | GateKind::PhaseDoubled => Some(1),
            GateKind::Cnot => Some(2),
            GateKind::FixedUnitary(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
    param_index: Option<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, param_index: Option<usize>) -> Result<Self> {
        if kind.is_parametrized() != param_index.is_some() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} {} a parameter index",
                if kind.is_parametrized() {
                    "requires"
                } else {
                    "does not take"
                }
            )));
        }
        if let Some(arity) = kind.arity() {
            if targets.len() != arity {
                return Err(Error::InvalidGate(format!(
                    "{kind:?} acts on {arity} qubit(s), got {} target(s)",
                    targets.len()
                )));
            }
        }
        if targets.is_empty() {
            return Err(Error::InvalidGate("gate without targets".into()));
        }
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(Error::InvalidGate(format!("repeated target qubit {t}")));
            }
        }
        if let GateKind::FixedUnitary(m) = &kind {
            check_unitary(m, targets.len())?;
        }
        Ok(Self {
            kind,
            targets,
            param_index,
        })
    }

    pub fn ry(target: usize, param: usize) -> Self {
        Self {
            kind: GateKind::RyHalfAngleDoubled,
            targets: vec![target],
            param_index: Some(param),
        }
    }

    pub fn phase(target: usize, param: usize) -> Self {
        Self {
            kind: GateKind::PhaseDoubled,
            targets: vec![target],
            param_index: Some(param),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            targets: vec![control, target],
            param_index: None,
        }
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn param_index(&self) -> Option<usize> {
        self.param_index
    }

    fn matrix(&self, theta: &[f64]) -> Vec<Complex64> {
        let c = |re: f64| Complex64::new(re, 0.0);
        match &self.kind {
            GateKind::RyHalfAngleDoubled => {
                let t = theta[self.param_index.unwrap()];
                let (s, co) = t.sin_cos();
                vec![c(co), c(-s), c(s), c(co)]
            }
            GateKind::PhaseDoubled => {
                let t = theta[self.param_index.unwrap()];
                vec![c(1.0), c(0.0), c(0.0), Complex64::from_polar(1.0, 2.0 * t)]
            }
            GateKind::Cnot => {
                let mut m = vec![c(0.0); 16];
                m[0] = c(1.0);
                m[5] = c(1.0);
                m[11] = c(1.0);
                m[14] = c(1.0);
                m
            }
            GateKind::FixedUnitary(m) => m.clone(),
        }
    }

    /// d/dθ of the gate matrix, i.e. generator times gate.
    fn derivative_matrix(&self, theta: &[f64]) -> Vec<Complex64> {
        let c = |re: f64| Complex64::new(re, 0.0);
        let t = theta[self.param_index.expect("parametrized gate")];
        match &self.kind {
            GateKind::RyHalfAngleDoubled => {
                let (s, co) = t.sin_cos();
                vec![c(-s), c(-co), c(co), c(-s)]
            }
            GateKind::PhaseDoubled => vec![
                c(0.0),
                c(0.0),
                c(0.0),
                Complex64::new(0.0, 2.0) * Complex64::from_polar(1.0, 2.0 * t),
            ],
            _ => unreachable!("fixed gates have no derivative"),
        }
    }
}

fn check_unitary(m: &[Complex64], k: usize) -> Result<()> {
    let d = 1usize << k;
    if m.len() != d * d {
        return Err(Error::InvalidGate(format!(
            "fixed unitary on {k} qubit(s) needs {} entries, got {}",
            d * d,
            m.len()
        )));
    }
    for i in 0..d {
        for j in 0..d {
            let dot: Complex64 = (0..d).map(|r| m[r * d + i].conj() * m[r * d + j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            if (dot - expected).norm() > UNITARITY_TOL {
                return Err(Error::InvalidGate("fixed matrix is not unitary".into()));
            }
        }
    }
    Ok(())
}

/// Ordered gate list defining `U(θ)`; applied left to right to |0…0⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl AnsatzCircuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidCircuit(
                "circuit needs at least one qubit".into(),
            ));
        }
        for g in &gates {
            if let Some(&q) = g.targets.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::InvalidCircuit(format!(
                    "target qubit {q} out of range for {n_qubits} qubit(s)"
                )));
            }
        }
        let n_params = gates
            .iter()
            .filter_map(|g| g.param_index)
            .max()
            .map_or(0, |m| m + 1);
        if let Some(unused) =
            (0..n_params).find(|i| !gates.iter().any(|g| g.param_index == Some(*i)))
        {
            return Err(Error::InvalidCircuit(format!(
                "parameter index {unused} is not used by any gate"
            )));
        }
        Ok(Self {
            n_qubits,
            gates,
            n_params,
        })
    }

    /// `|φ(θ)⟩ = cos θ1 |0⟩ + e^{2iθ2} sin θ1 |1⟩`.
    pub fn single_qubit() -> Self {
        Self::new(1, vec![Gate::ry(0, 0), Gate::phase(0, 1)]).expect("valid circuit")
    }

    /// `(R_y(2θ3) ⊗ R_y(2θ4)) CNOT (R_y(2θ1) ⊗ R_y(2θ2)) |00⟩`.
    pub fn hardware_efficient_two_qubit() -> Self {
        Self::new(
            2,
            vec![
                Gate::ry(0, 0),
                Gate::ry(1, 1),
                Gate::cnot(0, 1),
                Gate::ry(0, 2),
                Gate::ry(1, 3),
            ],
        )
        .expect("valid circuit")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// True when every gate matrix is real, so states stay real for all θ.
    pub fn is_real(&self) -> bool {
        self.gates.iter().all(|g| match &g.kind {
            GateKind::RyHalfAngleDoubled | GateKind::Cnot => true,
            GateKind::PhaseDoubled => false,
            GateKind::FixedUnitary(m) => m.iter().all(|z| z.im == 0.0),
        })
    }

    pub(crate) fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch {
                expected: self.n_params,
                actual: theta.len(),
                context: "parameter vector",
            });
        }
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFiniteParameter(i));
        }
        Ok(())
    }

    /// Runs the circuit, swapping gate `replaced` for its derivative.
    fn simulate(&self, theta: &[f64], replaced: Option<usize>) -> StateVector {
        let mut state = StateVector::zero(self.n_qubits);
        for (idx, gate) in self.gates.iter().enumerate() {
            let m = if replaced == Some(idx) {
                gate.derivative_matrix(theta)
            } else {
                gate.matrix(theta)
            };
            state.apply(&m, &gate.targets);
        }
        state
    }
}

/// `U(θ)|0…0⟩`.
pub fn build_state(circuit: &AnsatzCircuit, theta: &[f64]) -> Result<StateVector> {
    circuit.check_params(theta)?;
    Ok(circuit.simulate(theta, None))
}

/// Exact `∂|φ(θ)⟩/∂θ_i` for every parameter, by the product rule over all
/// gates that share parameter `i`.
pub fn derivative_states(circuit: &AnsatzCircuit, theta: &[f64]) -> Result<Vec<StateVector>> {
    circuit.check_params(theta)?;
    let dim = 1usize << circuit.n_qubits;
    let mut out = vec![
        StateVector {
            n_qubits: circuit.n_qubits,
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        };
        circuit.n_params
    ];
    for (idx, gate) in circuit.gates.iter().enumerate() {
        if let Some(p) = gate.param_index {
            let term = circuit.simulate(theta, Some(idx));
            for (acc, t) in out[p].amplitudes.iter_mut().zip(term.amplitudes) {
                *acc += t;
            }
        }
    }
    Ok(out)
}
