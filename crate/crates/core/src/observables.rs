//! Pauli-sum Hamiltonians, energies, exact energy gradients and spectral
//! decompositions.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{derivative_states, AnsatzCircuit, StateVector};

/// Imaginary parts of Hermitian expectation values above this are reported.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn matrix(self) -> [Complex64; 4] {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [one, z, z, one],
            Pauli::X => [z, one, one, z],
            Pauli::Y => [z, -i, i, z],
            Pauli::Z => [one, z, z, -one],
        }
    }
}

impl TryFrom<char> for Pauli {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::InvalidPauli(c.to_string())),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Real coefficient times a tensor product of Paulis; character `q` of the
/// label acts on qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub paulis: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, label: &str) -> Result<Self> {
        let paulis = label
            .chars()
            .map(Pauli::try_from)
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::InvalidPauli(label.to_string()))?;
        if paulis.is_empty() {
            return Err(Error::InvalidPauli(label.to_string()));
        }
        Ok(Self {
            coefficient,
            paulis,
        })
    }

    pub fn label(&self) -> String {
        self.paulis.iter().map(ToString::to_string).collect()
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    /// Parses `"0.4*ZI"` or a bare label such as `"XX"` (coefficient 1).
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('*') {
            Some((c, label)) => {
                let c = c
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidPauli(s.to_string()))?;
                PauliTerm::new(c, label.trim())
            }
            None => PauliTerm::new(1.0, s.trim()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    dense: DMatrix<Complex64>,
}

impl PauliHamiltonian {
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self> {
        let n_qubits = terms
            .first()
            .map(|t| t.paulis.len())
            .ok_or_else(|| Error::InvalidSetting("hamiltonian has no terms".into()))?;
        if let Some(t) = terms.iter().find(|t| t.paulis.len() != n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                actual: t.paulis.len(),
                context: "pauli string length",
            });
        }
        if let Some(t) = terms.iter().find(|t| !t.coefficient.is_finite()) {
            return Err(Error::InvalidSetting(format!(
                "non-finite coefficient on {}",
                t.label()
            )));
        }
        let dense = dense_matrix(n_qubits, &terms);
        Ok(Self {
            n_qubits,
            terms,
            dense,
        })
    }

    pub fn from_pairs(pairs: &[(f64, &str)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(c, l)| PauliTerm::new(c, l))
                .collect::<Result<_>>()?,
        )
    }

    pub fn sigma_x() -> Self {
        Self::from_pairs(&[(1.0, "X")]).expect("valid hamiltonian")
    }

    /// Two-qubit reduced H₂ model `α(Z⊗I + I⊗Z) + β X⊗X`.
    pub fn h2(alpha: f64, beta: f64) -> Self {
        Self::from_pairs(&[(alpha, "ZI"), (alpha, "IZ"), (beta, "XX")]).expect("valid hamiltonian")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn dense(&self) -> &DMatrix<Complex64> {
        &self.dense
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_state(state)?;
        let amps = state.amplitudes();
        let out = (0..amps.len())
            .map(|r| (0..amps.len()).map(|c| self.dense[(r, c)] * amps[c]).sum())
            .collect();
        StateVector::from_amplitudes(self.n_qubits, out)
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: state.n_qubits(),
                context: "qubit count of state vs hamiltonian",
            });
        }
        Ok(())
    }
}

fn dense_matrix(n_qubits: usize, terms: &[PauliTerm]) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for term in terms {
        let mut m = DMatrix::from_element(1, 1, Complex64::new(term.coefficient, 0.0));
        for p in &term.paulis {
            let local = DMatrix::from_row_slice(2, 2, &p.matrix());
            m = m.kronecker(&local);
        }
        out += m;
    }
    out
}

/// `⟨φ|H|φ⟩`.
pub fn energy(h: &PauliHamiltonian, state: &StateVector) -> Result<f64> {
    let value = state.inner(&h.apply(state)?);
    if value.im.abs() > IMAGINARY_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue(value.im));
    }
    Ok(value.re)
}

/// `∂f/∂θ_i = 2 Re⟨∂_iφ|H|φ⟩`.
pub fn energy_gradient(
    h: &PauliHamiltonian,
    circuit: &AnsatzCircuit,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let state = crate::state::build_state(circuit, theta)?;
    let h_state = h.apply(&state)?;
    Ok(derivative_states(circuit, theta)?
        .iter()
        .map(|d| 2.0 * d.inner(&h_state).re)
        .collect())
}

/// Distinct eigenvalues (ascending) and the orthogonal projectors onto their
/// eigenspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<DMatrix<Complex64>>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Eigenvalues closer than `degeneracy_tol` to the lowest member of their
/// run are merged into a single projector.
pub fn spectral_decompose(h: &PauliHamiltonian, degeneracy_tol: f64) -> SpectralDecomposition {
    let eig = SymmetricEigen::new(h.dense().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(g) if eig.eigenvalues[idx] - eig.eigenvalues[g[0]] <= degeneracy_tol => {
                g.push(idx)
            }
            _ => groups.push(vec![idx]),
        }
    }

    let dim = h.dense().nrows();
    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / g.len() as f64;
        let mut p = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for &i in &g {
            let v = eig.eigenvectors.column(i);
            p += v * v.adjoint();
        }
        eigenvalues.push(mean);
        projectors.push(p);
    }
    SpectralDecomposition {
        eigenvalues,
        projectors,
    }
}

/// Probabilities `p_i = ⟨φ|E_i|φ⟩` of measuring each eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub probabilities: Vec<f64>,
}

pub(crate) fn projector_expectation(
    projector: &DMatrix<Complex64>,
    bra: &StateVector,
    ket: &StateVector,
) -> Complex64 {
    let b = bra.amplitudes();
    let k = ket.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..b.len() {
        let row: Complex64 = (0..k.len()).map(|c| projector[(r, c)] * k[c]).sum();
        acc += b[r].conj() * row;
    }
    acc
}

pub(crate) fn check_decomp(decomp: &SpectralDecomposition, state: &StateVector) -> Result<()> {
    if decomp.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomp.dim(),
            actual: state.dim(),
            context: "state dimension vs spectral decomposition",
        });
    }
    Ok(())
}

pub fn outcome_distribution(
    decomp: &SpectralDecomposition,
    state: &StateVector,
) -> Result<OutcomeDistribution> {
    check_decomp(decomp, state)?;
    let probabilities = decomp
        .projectors
        .iter()
        .map(|p| projector_expectation(p, state, state).re.clamp(0.0, 1.0))
        .collect();
    Ok(OutcomeDistribution { probabilities })
}
