//! Trajectory files. Floats are written in shortest round-trip form, so
//! reading a file back reproduces the in-memory values bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use vqe_natgrad::{OptimizerKind, StepRecord, Trajectory};

use crate::config::RunConfig;
use crate::CliError;

/// A trajectory read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrajectory {
    pub label: String,
    pub steps: Vec<StepRecord>,
    pub terminal_reason: Option<String>,
}

impl LoadedTrajectory {
    pub fn n_params(&self) -> usize {
        self.steps.first().map_or(0, |s| s.theta.len())
    }
}

pub fn csv_header(n_params: usize) -> Vec<String> {
    let mut h = vec!["step".to_string()];
    h.extend((1..=n_params).map(|i| format!("theta_{i}")));
    h.extend(["energy", "grad_norm", "det_metric", "min_eig_metric"].map(String::from));
    h
}

pub fn write_csv<W: Write>(trajectory: &Trajectory, out: W) -> Result<(), CliError> {
    let n = trajectory.steps.first().map_or(0, |s| s.theta.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(n))?;
    for s in &trajectory.steps {
        let mut row = vec![s.k.to_string()];
        row.extend(s.theta.iter().map(f64::to_string));
        row.extend([s.energy, s.grad_norm, s.det_metric, s.min_eig_metric].map(|v| v.to_string()));
        w.write_record(row)?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn read_csv<R: Read>(label: &str, input: R) -> Result<LoadedTrajectory, CliError> {
    let malformed = |msg: String| CliError::Config(format!("{label}: {msg}"));
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let n = header
        .len()
        .checked_sub(5)
        .ok_or_else(|| malformed("too few columns".into()))?;
    if header.iter().ne(csv_header(n).iter().map(String::as_str)) {
        return Err(malformed(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut steps = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            record[i]
                .parse::<f64>()
                .map_err(|_| malformed(format!("row {}: bad number {:?}", line + 1, &record[i])))
        };
        let k = record[0]
            .parse::<usize>()
            .map_err(|_| malformed(format!("row {}: bad step {:?}", line + 1, &record[0])))?;
        steps.push(StepRecord {
            k,
            theta: (1..=n).map(num).collect::<Result<_, _>>()?,
            energy: num(n + 1)?,
            grad_norm: num(n + 2)?,
            det_metric: num(n + 3)?,
            min_eig_metric: num(n + 4)?,
        });
    }
    if steps.is_empty() {
        return Err(malformed("no records".into()));
    }
    Ok(LoadedTrajectory {
        label: label.to_string(),
        steps,
        terminal_reason: None,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonStep {
    pub k: usize,
    pub theta: Vec<f64>,
    #[serde(deserialize_with = "nullable_f64")]
    pub energy: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub grad_norm: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub det_metric: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub min_eig_metric: f64,
}

/// JSON writes non-finite floats as `null`.
fn nullable_f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetEcho {
    pub name: String,
    pub description: String,
    pub reference_energy: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonTrajectory {
    pub optimizer: String,
    pub preset: Option<PresetEcho>,
    pub config: RunConfig,
    pub steps: Vec<JsonStep>,
    pub terminal_reason: String,
}

pub fn write_json<W: Write>(
    trajectory: &Trajectory,
    preset: Option<PresetEcho>,
    config: &RunConfig,
    out: W,
) -> Result<(), CliError> {
    let doc = JsonTrajectory {
        optimizer: trajectory.kind.name().to_string(),
        preset,
        config: config.clone(),
        steps: trajectory
            .steps
            .iter()
            .map(|s| JsonStep {
                k: s.k,
                theta: s.theta.clone(),
                energy: s.energy,
                grad_norm: s.grad_norm,
                det_metric: s.det_metric,
                min_eig_metric: s.min_eig_metric,
            })
            .collect(),
        terminal_reason: trajectory.terminal_reason.to_string(),
    };
    serde_json::to_writer_pretty(out, &doc).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn read_json<R: Read>(label: &str, input: R) -> Result<LoadedTrajectory, CliError> {
    let doc: JsonTrajectory =
        serde_json::from_reader(input).map_err(|e| CliError::Config(format!("{label}: {e}")))?;
    if doc.steps.is_empty() {
        return Err(CliError::Config(format!("{label}: no records")));
    }
    Ok(LoadedTrajectory {
        label: label.to_string(),
        steps: doc
            .steps
            .into_iter()
            .map(|s| StepRecord {
                k: s.k,
                theta: s.theta,
                energy: s.energy,
                grad_norm: s.grad_norm,
                det_metric: s.det_metric,
                min_eig_metric: s.min_eig_metric,
            })
            .collect(),
        terminal_reason: Some(doc.terminal_reason),
    })
}

/// Reads a `.csv` or `.json` trajectory; the label is the file stem.
pub fn load(path: &Path) -> Result<LoadedTrajectory, CliError> {
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json(&label, file),
        _ => read_csv(&label, file),
    }
}

pub fn file_name(label: &str, kind: OptimizerKind, extension: &str) -> String {
    format!("{label}_{}.{extension}", kind.name())
}
