//! Metric matrices on parameter space: the Fubini-Study metric `F`, the
//! imaginary-time-evolution Gram matrix `A` and the classical Fisher metric
//! `F^C` of the distribution obtained by measuring the Hamiltonian.
//!
//! All three are built from exact derivative states. `A - F` is the rank-one
//! term `Re(⟨∂_iφ|φ⟩⟨φ|∂_jφ⟩)`, so `A ≥ F`, and `F ≥ F^C` because the quantum
//! metric bounds every measurement-induced classical one.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::observables::{check_decomp, projector_expectation, SpectralDecomposition};
use crate::state::{build_state, derivative_states, AnsatzCircuit, StateVector};

pub const DEFAULT_PROB_FLOOR: f64 = 1e-12;
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    FubiniStudy,
    Ite,
    ClassicalFisher,
    /// Identity metric, i.e. plain gradient descent.
    Euclidean,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::FubiniStudy => "fubini-study",
            MetricKind::Ite => "ite",
            MetricKind::ClassicalFisher => "classical-fisher",
            MetricKind::Euclidean => "euclidean",
        }
    }
}

/// Real symmetric positive-semidefinite matrix tagged with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    pub kind: MetricKind,
    pub values: DMatrix<f64>,
    /// Set when a solver floored the spectrum before inverting.
    pub eigen_floor_applied: Option<f64>,
}

impl MetricMatrix {
    pub fn new(kind: MetricKind, values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                actual: values.ncols(),
                context: "metric must be square",
            });
        }
        let asym = asymmetry(&values);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self {
            kind,
            values,
            eigen_floor_applied: None,
        })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            kind: MetricKind::Euclidean,
            values: DMatrix::identity(m, m),
            eigen_floor_applied: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.values)
    }

    pub fn determinant(&self) -> f64 {
        self.values.determinant()
    }

    /// Copy with every eigenvalue raised to at least `floor`.
    pub fn floored(&self, floor: f64) -> Self {
        let eig = SymmetricEigen::new(self.values.clone());
        let lifted = eig.eigenvalues.map(|s| s.max(floor));
        let values =
            &eig.eigenvectors * DMatrix::from_diagonal(&lifted) * eig.eigenvectors.transpose();
        Self {
            kind: self.kind,
            values: symmetrize(values),
            eigen_floor_applied: Some(floor),
        }
    }
}

pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

pub(crate) fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn gram_real(derivs: &[StateVector]) -> DMatrix<f64> {
    let m = derivs.len();
    DMatrix::from_fn(m, m, |i, j| derivs[i].inner(&derivs[j]).re)
}

/// `F_ij = Re⟨∂_iφ|∂_jφ⟩ − Re(⟨∂_iφ|φ⟩⟨φ|∂_jφ⟩)`.
///
/// For circuits made only of real gates `⟨∂_iφ|φ⟩` vanishes identically, so
/// the second term is skipped and `F` is bitwise equal to [`ite_matrix`].
/// Evaluating it would only add roundoff that a floored inverse amplifies.
pub fn fubini_study_metric(circuit: &AnsatzCircuit, theta: &[f64]) -> Result<MetricMatrix> {
    let state = build_state(circuit, theta)?;
    let derivs = derivative_states(circuit, theta)?;
    if circuit.is_real() {
        return MetricMatrix::new(MetricKind::FubiniStudy, symmetrize(gram_real(&derivs)));
    }
    let overlaps: Vec<_> = derivs.iter().map(|d| d.inner(&state)).collect();
    let m = derivs.len();
    let berry = DMatrix::from_fn(m, m, |i, j| (overlaps[i] * overlaps[j].conj()).re);
    MetricMatrix::new(
        MetricKind::FubiniStudy,
        symmetrize(gram_real(&derivs) - berry),
    )
}

/// `A_ij = Re⟨∂_iφ|∂_jφ⟩`.
pub fn ite_matrix(circuit: &AnsatzCircuit, theta: &[f64]) -> Result<MetricMatrix> {
    let derivs = derivative_states(circuit, theta)?;
    MetricMatrix::new(MetricKind::Ite, symmetrize(gram_real(&derivs)))
}

/// `F^C = Σ_i (1/p_i) ∇p_i ∇p_iᵀ` over outcomes with `p_i > prob_floor`,
/// where `∂p_i/∂θ_j = 2 Re⟨∂_jφ|E_i|φ⟩`.
///
/// Fails with [`Error::DegenerateDistribution`] when fewer than two outcomes
/// survive the floor.
pub fn classical_fisher_metric(
    circuit: &AnsatzCircuit,
    theta: &[f64],
    decomp: &SpectralDecomposition,
    prob_floor: f64,
) -> Result<MetricMatrix> {
    let state = build_state(circuit, theta)?;
    check_decomp(decomp, &state)?;
    let derivs = derivative_states(circuit, theta)?;
    let m = derivs.len();
    let mut values = DMatrix::zeros(m, m);
    let mut retained = 0;
    for projector in &decomp.projectors {
        let p = projector_expectation(projector, &state, &state).re;
        if p <= prob_floor {
            continue;
        }
        retained += 1;
        let grad: Vec<f64> = derivs
            .iter()
            .map(|d| 2.0 * projector_expectation(projector, d, &state).re)
            .collect();
        for i in 0..m {
            for j in 0..m {
                values[(i, j)] += grad[i] * grad[j] / p;
            }
        }
    }
    if retained < 2 {
        return Err(Error::DegenerateDistribution);
    }
    MetricMatrix::new(MetricKind::ClassicalFisher, symmetrize(values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityReport {
    pub determinant: f64,
    pub min_eigenvalue: f64,
    pub rank: usize,
    pub is_singular: bool,
}

/// `rank_tol` is relative to the largest eigenvalue (absolute when that is
/// not positive).
pub fn singularity_report(metric: &MetricMatrix, rank_tol: f64) -> SingularityReport {
    let ev = metric.eigenvalues();
    let max = ev.last().copied().unwrap_or(0.0);
    let threshold = if max > 0.0 { rank_tol * max } else { rank_tol };
    let min_eigenvalue = ev.first().copied().unwrap_or(0.0);
    SingularityReport {
        determinant: metric.determinant(),
        min_eigenvalue,
        rank: ev.iter().filter(|&&e| e >= threshold).count(),
        is_singular: min_eigenvalue < threshold,
    }
}

/// Von Neumann entropy (natural log) of the reduced state of qubit 0.
pub fn entanglement_entropy(state: &StateVector) -> Result<f64> {
    if state.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: state.n_qubits(),
            context: "entanglement entropy needs a two-qubit state",
        });
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidSetting(format!(
            "state is not normalized (norm² = {norm})"
        )));
    }
    let a = state.amplitudes();
    // ρ1 = M M† with M[q0][q1] = a[2*q0 + q1]
    let r00 = a[0].norm_sqr() + a[1].norm_sqr();
    let r11 = a[2].norm_sqr() + a[3].norm_sqr();
    let r01 = a[0] * a[2].conj() + a[1] * a[3].conj();
    let half_gap = ((r00 - r11).powi(2) / 4.0 + r01.norm_sqr()).sqrt();
    let mid = (r00 + r11) / 2.0;
    let s: f64 = [mid + half_gap, mid - half_gap]
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum();
    Ok(s.clamp(0.0, std::f64::consts::LN_2))
}

/// Whether `a − b` is positive semidefinite up to `tol`.
pub fn psd_order_check(a: &MetricMatrix, b: &MetricMatrix, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
            context: "matrix order comparison",
        });
    }
    let diff = symmetrize(&a.values - &b.values);
    Ok(sorted_eigenvalues(&diff)[0] >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{spectral_decompose, PauliHamiltonian, DEFAULT_DEGENERACY_TOL};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, LN_2};

    fn assert_matrix(m: &DMatrix<f64>, expected: &[f64], tol: f64) {
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                let e = expected[i * n + j];
                assert!(
                    (m[(i, j)] - e).abs() < tol,
                    "({i},{j}): {} vs {e}",
                    m[(i, j)]
                );
            }
        }
    }

    #[test]
    fn single_qubit_metrics() {
        let c = AnsatzCircuit::single_qubit();
        for &(t1, t2) in &[(0.3, 0.1), (1.2, -2.0), (FRAC_PI_2, 0.4)] {
            let f = fubini_study_metric(&c, &[t1, t2]).unwrap();
            assert_matrix(
                &f.values,
                &[1.0, 0.0, 0.0, f64::sin(2.0 * t1).powi(2)],
                1e-14,
            );
            let a = ite_matrix(&c, &[t1, t2]).unwrap();
            assert_matrix(
                &a.values,
                &[1.0, 0.0, 0.0, 4.0 * f64::sin(t1).powi(2)],
                1e-14,
            );
        }
        let f = fubini_study_metric(&c, &[0.0, 0.9]).unwrap();
        assert_matrix(&f.values, &[1.0, 0.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn south_pole_singular_only_for_fubini_study() {
        let c = AnsatzCircuit::single_qubit();
        let f = fubini_study_metric(&c, &[FRAC_PI_2, 0.3]).unwrap();
        let a = ite_matrix(&c, &[FRAC_PI_2, 0.3]).unwrap();
        assert_matrix(&a.values, &[1.0, 0.0, 0.0, 4.0], 1e-14);
        let rf = singularity_report(&f, DEFAULT_RANK_TOL);
        assert_eq!(rf.rank, 1);
        assert!(rf.is_singular);
        let ra = singularity_report(&a, DEFAULT_RANK_TOL);
        assert_eq!(ra.rank, 2);
        assert!(!ra.is_singular);
    }

    #[test]
    fn floor_lifts_null_directions() {
        let c = AnsatzCircuit::single_qubit();
        let f = fubini_study_metric(&c, &[0.0, 0.0]).unwrap().floored(1e-3);
        assert_eq!(f.eigen_floor_applied, Some(1e-3));
        assert_matrix(&f.values, &[1.0, 0.0, 0.0, 1e-3], 1e-14);
    }

    #[test]
    fn identity_report() {
        let r = singularity_report(&MetricMatrix::identity(3), DEFAULT_RANK_TOL);
        assert_eq!(r.rank, 3);
        assert!(!r.is_singular);
        assert!((r.determinant - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            MetricMatrix::new(MetricKind::Ite, m),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn classical_fisher_hand_value() {
        // p+ = (1 + sin2θ1 cos2θ2)/2, ∇p+ = (cos2θ1 cos2θ2, −sin2θ1 sin2θ2)
        let c = AnsatzCircuit::single_qubit();
        let d = spectral_decompose(&PauliHamiltonian::sigma_x(), DEFAULT_DEGENERACY_TOL);
        let theta = [FRAC_PI_8, 0.0];
        let fc = classical_fisher_metric(&c, &theta, &d, DEFAULT_PROB_FLOOR).unwrap();
        let h = 0.5f64.sqrt();
        let p_plus = (1.0 + h) / 2.0;
        let grad = [h, 0.0];
        let scale = 1.0 / (p_plus * (1.0 - p_plus));
        let expected: Vec<f64> = (0..4).map(|k| scale * grad[k / 2] * grad[k % 2]).collect();
        assert_matrix(&fc.values, &expected, 1e-13);
        assert!((fc.values[(0, 0)] - 4.0).abs() < 1e-13);

        // E[(∂ log p)²] by central differences of the outcome probabilities.
        let probs = |t: &[f64]| {
            let s = build_state(&c, t).unwrap();
            crate::observables::outcome_distribution(&d, &s)
                .unwrap()
                .probabilities
        };
        let delta = 1e-6;
        let p0 = probs(&theta);
        let plus = probs(&[theta[0] + delta, theta[1]]);
        let minus = probs(&[theta[0] - delta, theta[1]]);
        let fd: f64 = (0..2)
            .map(|i| {
                let dlog = (plus[i].ln() - minus[i].ln()) / (2.0 * delta);
                p0[i] * dlog * dlog
            })
            .sum();
        assert!((fd - fc.values[(0, 0)]).abs() < 1e-7, "{fd}");
    }

    #[test]
    fn classical_fisher_degenerate() {
        let c = AnsatzCircuit::single_qubit();
        let d = spectral_decompose(&PauliHamiltonian::sigma_x(), DEFAULT_DEGENERACY_TOL);
        let err = classical_fisher_metric(&c, &[FRAC_PI_4, 0.0], &d, DEFAULT_PROB_FLOOR);
        assert_eq!(err, Err(Error::DegenerateDistribution));
        assert_eq!(
            err.unwrap_err().to_string(),
            "metric undefined: degenerate distribution"
        );
    }

    #[test]
    fn entropy_examples() {
        let s = entanglement_entropy(&StateVector::zero(2)).unwrap();
        assert_eq!(s, 0.0);
        let bell = StateVector::from_real_normalized(2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((entanglement_entropy(&bell).unwrap() - LN_2).abs() < 1e-14);
        assert!(entanglement_entropy(&StateVector::zero(1)).is_err());
        let unnormalized = StateVector::from_amplitudes(
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        assert!(entanglement_entropy(&unnormalized).is_err());
    }

    #[test]
    fn psd_order_examples() {
        let c = AnsatzCircuit::single_qubit();
        let theta = [FRAC_PI_4, 0.3];
        let f = fubini_study_metric(&c, &theta).unwrap();
        let a = ite_matrix(&c, &theta).unwrap();
        assert!(psd_order_check(&a, &f, 1e-9).unwrap());
        assert!(!psd_order_check(&f, &a, 1e-9).unwrap());
        // A − F = diag(0, 4 sin⁴θ1)
        let diff = &a.values - &f.values;
        assert!((diff[(1, 1)] - 4.0 * f64::sin(FRAC_PI_4).powi(4)).abs() < 1e-14);
        assert!(psd_order_check(&a, &MetricMatrix::identity(3), 0.0).is_err());
    }
}
