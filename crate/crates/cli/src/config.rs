//! Run configuration: either a built-in preset or an explicit Hamiltonian and
//! circuit, read from TOML and overridden by command-line flags.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use vqe_natgrad::experiments::{preset, PresetName};
use vqe_natgrad::optimizers::RunOptions;
use vqe_natgrad::{
    AnsatzCircuit, Gate, GateKind, LearningRateSchedule, OptimizerKind, PauliHamiltonian,
    PauliTerm, Problem, RegularizationPolicy,
};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<TermSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizers: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularization: Option<RegularizationSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coefficient: f64,
    pub pauli: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub gates: Vec<GateSpec>,
}

/// `kind` is one of `ry`, `phase`, `cnot`, `unitary`. A `unitary` gate
/// carries `matrix` as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub kind: String,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// `constant` or `inverse-step`
    pub kind: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSpec {
    /// `eigen-floor`, `tikhonov` or `pinv`
    pub kind: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!(
                "unknown format {other:?} (csv or json)"
            ))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// The Hamiltonian and circuit a config describes, with preset extras.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub label: String,
    pub preset: Option<PresetName>,
    pub problem: Problem,
    pub reference_energy: Option<f64>,
    pub default_theta0: Option<Vec<f64>>,
}

/// Everything needed to execute a run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    /// Preset name, or `custom`.
    pub label: String,
    pub preset: Option<PresetName>,
    pub problem: Problem,
    pub theta0: Vec<f64>,
    pub kinds: Vec<OptimizerKind>,
    pub options: RunOptions,
    pub reference_energy: Option<f64>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fields set in `other` take precedence.
    pub fn merge(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            preset,
            hamiltonian,
            circuit,
            theta0,
            optimizers,
            schedule,
            regularization,
            max_steps,
            grad_tol,
            out_dir,
            format
        );
        self
    }

    pub fn output_format(&self) -> Result<OutputFormat, CliError> {
        OutputFormat::parse(self.format.as_deref().unwrap_or("csv"))
    }

    /// Problem definition only (preset or explicit), for commands that do
    /// not iterate.
    pub fn resolve_problem(&self) -> Result<ResolvedProblem, CliError> {
        let explicit = self.hamiltonian.is_some() || self.circuit.is_some();
        match (&self.preset, explicit) {
            (Some(_), true) => Err(CliError::Config(
                "give either a preset or an explicit hamiltonian/circuit, not both".into(),
            )),
            (None, false) => Err(CliError::Config(
                "no problem given: use --preset or a config with hamiltonian and circuit".into(),
            )),
            (Some(name), false) => {
                let name: PresetName =
                    name.parse().map_err(|e| CliError::Config(format!("{e}")))?;
                let p = preset(name);
                Ok(ResolvedProblem {
                    label: name.to_string(),
                    preset: Some(name),
                    problem: p.problem(),
                    reference_energy: Some(p.reference_energy),
                    default_theta0: Some(p.theta0),
                })
            }
            (None, true) => {
                let (Some(h), Some(c)) = (&self.hamiltonian, &self.circuit) else {
                    return Err(CliError::Config(
                        "explicit problems need both hamiltonian and circuit".into(),
                    ));
                };
                let problem = Problem::new(build_hamiltonian(h)?, build_circuit(c)?)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let ground = problem.decomposition.ground_energy();
                Ok(ResolvedProblem {
                    label: "custom".to_string(),
                    preset: None,
                    problem,
                    reference_energy: Some(ground),
                    default_theta0: None,
                })
            }
        }
    }

    pub fn resolve(&self) -> Result<ResolvedRun, CliError> {
        let ResolvedProblem {
            label,
            preset: preset_name,
            problem,
            reference_energy,
            default_theta0,
        } = self.resolve_problem()?;
        let preset_defaults = preset_name.map(preset);

        let theta0 =
            self.theta0.clone().or(default_theta0).ok_or_else(|| {
                CliError::Config("theta0 is required for explicit problems".into())
            })?;
        if theta0.len() != problem.n_params() {
            return Err(CliError::Config(format!(
                "theta0 has {} entries but the circuit has {} parameters",
                theta0.len(),
                problem.n_params()
            )));
        }

        let names = self
            .optimizers
            .clone()
            .unwrap_or_else(|| vec!["vanilla".into(), "natural".into(), "ite".into()]);
        let mut kinds = Vec::new();
        for n in &names {
            let kind: OptimizerKind = n.parse().map_err(|e| CliError::Config(format!("{e}")))?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            return Err(CliError::Config("no optimizer selected".into()));
        }

        let default_eta = preset_defaults.as_ref().map_or(0.05, |p| p.eta);
        let schedule = match &self.schedule {
            None => LearningRateSchedule::Constant(default_eta),
            Some(s) => match s.kind.as_str() {
                "constant" => LearningRateSchedule::Constant(s.value),
                "inverse-step" | "inverse" => LearningRateSchedule::InverseStep(s.value),
                other => return Err(CliError::Config(format!("unknown schedule {other:?}"))),
            },
        };
        let policy = match &self.regularization {
            None => RegularizationPolicy::default(),
            Some(r) => match r.kind.as_str() {
                "eigen-floor" => RegularizationPolicy::EigenFloor(r.value),
                "tikhonov" => RegularizationPolicy::Tikhonov(r.value),
                "pinv" | "pseudo-inverse" => RegularizationPolicy::PseudoInverse(r.value),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown regularization {other:?}"
                    )))
                }
            },
        };
        let max_steps = self
            .max_steps
            .or(preset_defaults.as_ref().map(|p| p.max_steps))
            .unwrap_or(300);
        if max_steps == 0 {
            return Err(CliError::Config("steps must be at least 1".into()));
        }
        let grad_tol = self.grad_tol.unwrap_or(0.0);
        if grad_tol.is_nan() || grad_tol < 0.0 {
            return Err(CliError::Config("grad_tol must be non-negative".into()));
        }
        let rate = match schedule {
            LearningRateSchedule::Constant(v) | LearningRateSchedule::InverseStep(v) => v,
        };
        if !(rate.is_finite() && rate > 0.0) {
            return Err(CliError::Config(format!(
                "learning rate must be positive, got {rate}"
            )));
        }

        Ok(ResolvedRun {
            label,
            preset: preset_name,
            problem,
            theta0,
            kinds,
            options: RunOptions {
                schedule,
                policy,
                max_steps,
                grad_tol,
            },
            reference_energy,
        })
    }
}

fn build_hamiltonian(terms: &[TermSpec]) -> Result<PauliHamiltonian, CliError> {
    let terms = terms
        .iter()
        .map(|t| PauliTerm::new(t.coefficient, &t.pauli))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    PauliHamiltonian::new(terms).map_err(|e| CliError::Config(e.to_string()))
}

fn build_circuit(spec: &CircuitSpec) -> Result<AnsatzCircuit, CliError> {
    let gates =
        spec.gates
            .iter()
            .map(|g| {
                let kind = match g.kind.as_str() {
                    "ry" => GateKind::RyHalfAngleDoubled,
                    "phase" => GateKind::PhaseDoubled,
                    "cnot" => GateKind::Cnot,
                    "unitary" => {
                        let rows = g.matrix.as_ref().ok_or_else(|| {
                            CliError::Config("unitary gate needs a matrix".into())
                        })?;
                        GateKind::FixedUnitary(
                            rows.iter()
                                .flatten()
                                .map(|[re, im]| Complex64::new(*re, *im))
                                .collect(),
                        )
                    }
                    other => return Err(CliError::Config(format!("unknown gate kind {other:?}"))),
                };
                Gate::new(kind, g.targets.clone(), g.param_index)
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
    AnsatzCircuit::new(spec.n_qubits, gates).map_err(|e| CliError::Config(e.to_string()))
}
