//! Built-in single-qubit and H₂ scenarios and side-by-side optimizer
//! comparisons.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::thread;

use crate::error::{Error, Result};
use crate::observables::PauliHamiltonian;
use crate::optimizers::{
    run, LearningRateSchedule, OptimizerKind, Problem, RegularizationPolicy, RunOptions, Trajectory,
};
use crate::state::AnsatzCircuit;

pub const DEFAULT_THRESHOLD: f64 = 0.01;
pub const H2_ALPHA: f64 = 0.4;
pub const H2_BETA: f64 = 0.2;
pub const TOY_BETA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    QubitA,
    QubitB,
    H2A,
    H2Plateau,
    Toy,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::QubitA,
        PresetName::QubitB,
        PresetName::H2A,
        PresetName::H2Plateau,
        PresetName::Toy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::QubitA => "qubit-a",
            PresetName::QubitB => "qubit-b",
            PresetName::H2A => "h2-a",
            PresetName::H2Plateau => "h2-plateau",
            PresetName::Toy => "toy",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetName::QubitA => "H = σx, single-qubit ansatz from (π/12, π/12)",
            PresetName::QubitB => "H = σx, single-qubit ansatz from (5π/12, π/12)",
            PresetName::H2A => {
                "H₂ (α=0.4, β=0.2), hardware-efficient ansatz from (-0.2, -0.2, 0, 0)"
            }
            PresetName::H2Plateau => {
                "H₂ (α=0.4, β=0.2) from (7π/32, π/2, 0, 0), first-excited plateau"
            }
            PresetName::Toy => "toy molecule (α=0.4, β=0.02) from (-0.2, -0.2, 0, 0)",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: PresetName,
    pub hamiltonian: PauliHamiltonian,
    pub circuit: AnsatzCircuit,
    pub theta0: Vec<f64>,
    pub eta: f64,
    pub max_steps: usize,
    /// Exact ground energy of `hamiltonian`.
    pub reference_energy: f64,
}

impl Preset {
    pub fn problem(&self) -> Problem {
        Problem::new(self.hamiltonian.clone(), self.circuit.clone())
            .expect("preset hamiltonian and circuit agree")
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            schedule: LearningRateSchedule::Constant(self.eta),
            policy: RegularizationPolicy::default(),
            max_steps: self.max_steps,
            grad_tol: 0.0,
        }
    }
}

fn h2_ground_energy(alpha: f64, beta: f64) -> f64 {
    -(4.0 * alpha * alpha + beta * beta).sqrt()
}

pub fn load_preset(name: &str) -> Result<Preset> {
    Ok(preset(name.parse()?))
}

pub fn preset(name: PresetName) -> Preset {
    let qubit = |theta0: Vec<f64>| Preset {
        name,
        hamiltonian: PauliHamiltonian::sigma_x(),
        circuit: AnsatzCircuit::single_qubit(),
        theta0,
        eta: 0.05,
        max_steps: 300,
        reference_energy: -1.0,
    };
    let h2 = |beta: f64, theta0: Vec<f64>, max_steps: usize| Preset {
        name,
        hamiltonian: PauliHamiltonian::h2(H2_ALPHA, beta),
        circuit: AnsatzCircuit::hardware_efficient_two_qubit(),
        theta0,
        eta: 0.05,
        max_steps,
        reference_energy: h2_ground_energy(H2_ALPHA, beta),
    };
    match name {
        PresetName::QubitA => qubit(vec![PI / 12.0, PI / 12.0]),
        PresetName::QubitB => qubit(vec![5.0 * PI / 12.0, PI / 12.0]),
        PresetName::H2A => h2(H2_BETA, vec![-0.2, -0.2, 0.0, 0.0], 1000),
        PresetName::H2Plateau => h2(H2_BETA, vec![7.0 * PI / 32.0, PI / 2.0, 0.0, 0.0], 3000),
        PresetName::Toy => h2(TOY_BETA, vec![-0.2, -0.2, 0.0, 0.0], 3000),
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerSummary {
    pub kind: OptimizerKind,
    /// First record with `energy ≤ reference_energy + threshold`.
    pub steps_to_threshold: Option<usize>,
    pub final_energy: f64,
    pub final_theta: Vec<f64>,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub preset: PresetName,
    pub threshold: f64,
    pub reference_energy: f64,
    pub results: Vec<OptimizerSummary>,
}

impl ComparisonReport {
    pub fn get(&self, kind: OptimizerKind) -> Option<&OptimizerSummary> {
        self.results.iter().find(|r| r.kind == kind)
    }

    /// True when `a` reaches the threshold and does so in strictly fewer
    /// steps than `b` (or `b` never does).
    pub fn strictly_faster(&self, a: OptimizerKind, b: OptimizerKind) -> bool {
        let steps = |k| self.get(k).and_then(|r| r.steps_to_threshold);
        match (steps(a), steps(b)) {
            (Some(x), Some(y)) => x < y,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

pub fn compare(
    preset: &Preset,
    kinds: &[OptimizerKind],
    threshold: f64,
) -> Result<ComparisonReport> {
    compare_with(preset, kinds, threshold, &preset.run_options())
}

/// Runs every optimizer with the same options, one thread per optimizer.
pub fn compare_with(
    preset: &Preset,
    kinds: &[OptimizerKind],
    threshold: f64,
    options: &RunOptions,
) -> Result<ComparisonReport> {
    let problem = preset.problem();
    let trajectories: Vec<Result<Trajectory>> = thread::scope(|scope| {
        let handles: Vec<_> = kinds
            .iter()
            .map(|&kind| {
                let problem = &problem;
                scope.spawn(move || run(problem, kind, &preset.theta0, options))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("optimizer thread panicked"))
            .collect()
    });
    let level = preset.reference_energy + threshold;
    let results = trajectories
        .into_iter()
        .map(|t| {
            let trajectory = t?;
            let last = trajectory.last();
            Ok(OptimizerSummary {
                kind: trajectory.kind,
                steps_to_threshold: trajectory.first_at_or_below(level),
                final_energy: last.energy,
                final_theta: last.theta.clone(),
                trajectory,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonReport {
        preset: preset.name,
        threshold,
        reference_energy: preset.reference_energy,
        results,
    })
}

/// Length of the longest run of consecutive records with
/// `|energy − center| < half_width`, and the index where it starts.
pub fn longest_run_near(
    trajectory: &Trajectory,
    center: f64,
    half_width: f64,
) -> (usize, Option<usize>) {
    let mut best = (0, None);
    let mut current = 0;
    for (i, e) in trajectory.energies().enumerate() {
        if (e - center).abs() < half_width {
            current += 1;
            if current > best.0 {
                best = (current, Some(i + 1 - current));
            }
        } else {
            current = 0;
        }
    }
    best
}

/// Whether every one of the last `window` records has
/// `|energy − target| < tol`.
pub fn holds_near(trajectory: &Trajectory, target: f64, tol: f64, window: usize) -> bool {
    let n = trajectory.steps.len();
    n >= window
        && trajectory.steps[n - window..]
            .iter()
            .all(|s| (s.energy - target).abs() < tol)
}
