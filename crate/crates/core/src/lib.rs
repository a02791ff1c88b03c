//! Natural-gradient optimizers for variational quantum eigensolvers on small
//! qubit registers.
//!
//! States are dense statevectors and every derivative is exact, so the
//! Fubini-Study metric, the imaginary-time-evolution Gram matrix and the
//! classical Fisher metric of a measured Hamiltonian can be compared
//! without sampling noise.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod observables;
pub mod optimizers;
pub mod state;

pub use error::{Error, Result};
pub use experiments::{
    compare, load_preset, ComparisonReport, OptimizerSummary, Preset, PresetName,
};
pub use geometry::{
    classical_fisher_metric, entanglement_entropy, fubini_study_metric, ite_matrix,
    psd_order_check, singularity_report, MetricKind, MetricMatrix, SingularityReport,
};
pub use observables::{
    energy, energy_gradient, outcome_distribution, spectral_decompose, OutcomeDistribution, Pauli,
    PauliHamiltonian, PauliTerm, SpectralDecomposition,
};
pub use optimizers::{
    run, solve_regularized, step, LearningRateSchedule, OptimizerKind, Problem,
    RegularizationPolicy, StepRecord, TerminalReason, Trajectory,
};
pub use state::{build_state, derivative_states, AnsatzCircuit, Gate, GateKind, StateVector};
