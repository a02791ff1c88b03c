use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use vqe_natgrad::experiments::{preset, PresetName};
use vqe_natgrad::geometry::DEFAULT_RANK_TOL;
use vqe_natgrad::{
    classical_fisher_metric, fubini_study_metric, ite_matrix, singularity_report, MetricMatrix,
    Trajectory,
};

use crate::config::{OutputFormat, RegularizationSpec, RunConfig, ScheduleSpec};
use crate::output::{self, PresetEcho};
use crate::{plot, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "vqe-natgrad",
    version,
    about = "Natural-gradient VQE experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a preset or configured problem and write one trajectory file per optimizer.
    Run(RunArgs),
    /// Print metric tensors and their singularity report at a parameter point.
    Metric(MetricArgs),
    /// Render trajectory files as SVG.
    Plot(PlotArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Built-in problem (see `presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML file with RunConfig fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated list of vanilla, natural, ite, classical.
    #[arg(long, value_delimiter = ',')]
    pub optimizer: Option<Vec<String>>,
    /// Number of updates.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Learning rate (the constant c of an inverse-step schedule).
    #[arg(long)]
    pub eta: Option<f64>,
    /// `constant` or `inverse-step`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// `eigen-floor`, `tikhonov` or `pinv`.
    #[arg(long)]
    pub regularization: Option<String>,
    /// Strength of the regularization.
    #[arg(long)]
    pub reg_eps: Option<f64>,
    /// Stop once the gradient norm drops below this value.
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Comma-separated starting point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta0: Option<Vec<f64>>,
    #[arg(long, env = "VQE_NATGRAD_OUT_DIR")]
    pub out_dir: Option<String>,
    /// `csv` or `json`.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    Fs,
    Ite,
    Classical,
    All,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated parameter point.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub theta: Vec<f64>,
    #[arg(long, value_enum, default_value = "fs")]
    pub kind: MetricChoice,
    /// Eigenvalues below rank_tol · λ_max count as zero.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Trajectory files (.csv or .json).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Energy plot destination; the path plot goes next to it as `<stem>_path.svg`.
    #[arg(long, default_value = "energy.svg")]
    pub out: PathBuf,
    /// Also draw the trajectories in the (θ₁, θ₂) plane.
    #[arg(long)]
    pub path: bool,
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args, out),
        Command::Metric(args) => cmd_metric(&args, out),
        Command::Plot(args) => cmd_plot(&args, out),
        Command::Presets => cmd_presets(out),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn base_config(problem: &ProblemArgs) -> Result<RunConfig, CliError> {
    let file = match &problem.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    Ok(file.merge(RunConfig {
        preset: problem.preset.clone(),
        ..RunConfig::default()
    }))
}

/// The effective configuration: the file (if any) overridden by flags.
pub fn run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let base = base_config(&args.problem)?;
    let schedule = if args.eta.is_some() || args.schedule.is_some() {
        let value = match (args.eta, &base.schedule, &base.preset) {
            (Some(v), _, _) => v,
            (None, Some(s), _) => s.value,
            (None, None, Some(name)) => {
                let name: PresetName =
                    name.parse().map_err(|e| CliError::Config(format!("{e}")))?;
                preset(name).eta
            }
            (None, None, None) => 0.05,
        };
        let kind = args
            .schedule
            .clone()
            .or_else(|| base.schedule.as_ref().map(|s| s.kind.clone()))
            .unwrap_or_else(|| "constant".into());
        Some(ScheduleSpec { kind, value })
    } else {
        None
    };
    let regularization = if args.regularization.is_some() || args.reg_eps.is_some() {
        let kind = args
            .regularization
            .clone()
            .or_else(|| base.regularization.as_ref().map(|r| r.kind.clone()))
            .unwrap_or_else(|| "eigen-floor".into());
        let value = args
            .reg_eps
            .or_else(|| base.regularization.as_ref().map(|r| r.value))
            .unwrap_or(1e-10);
        Some(RegularizationSpec { kind, value })
    } else {
        None
    };
    Ok(base.merge(RunConfig {
        theta0: args.theta0.clone(),
        optimizers: args.optimizer.clone(),
        schedule,
        regularization,
        max_steps: args.steps,
        grad_tol: args.grad_tol,
        out_dir: args.out_dir.clone(),
        format: args.format.clone(),
        ..RunConfig::default()
    }))
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = run_config(args)?;
    let format = config.output_format()?;
    let resolved = config.resolve()?;
    let out_dir = PathBuf::from(config.out_dir.as_deref().unwrap_or("out"));

    let trajectories: Vec<vqe_natgrad::Result<Trajectory>> = std::thread::scope(|s| {
        let handles: Vec<_> = resolved
            .kinds
            .iter()
            .map(|&kind| {
                let r = &resolved;
                s.spawn(move || vqe_natgrad::run(&r.problem, kind, &r.theta0, &r.options))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("optimizer thread panicked"))
            .collect()
    });

    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let echo = resolved.preset.map(|name| {
        let p = preset(name);
        PresetEcho {
            name: name.to_string(),
            description: name.description().to_string(),
            reference_energy: p.reference_energy,
        }
    });
    for (kind, trajectory) in resolved.kinds.iter().zip(trajectories) {
        let trajectory = trajectory?;
        let path = out_dir.join(output::file_name(
            &resolved.label,
            *kind,
            format.extension(),
        ));
        write_trajectory(&path, &trajectory, format, echo.as_ref(), &config)?;
        let last = trajectory.last();
        writeln!(
            out,
            "{}: {} after {} steps, energy {} -> {}",
            kind,
            trajectory.terminal_reason,
            last.k,
            last.energy,
            path.display()
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn write_trajectory(
    path: &Path,
    trajectory: &Trajectory,
    format: OutputFormat,
    echo: Option<&PresetEcho>,
    config: &RunConfig,
) -> Result<(), CliError> {
    let file = fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    let writer = std::io::BufWriter::new(file);
    match format {
        OutputFormat::Csv => output::write_csv(trajectory, writer),
        OutputFormat::Json => output::write_json(trajectory, echo.cloned(), config, writer),
    }
}

pub fn cmd_metric(args: &MetricArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = base_config(&args.problem)?;
    let resolved = config.resolve_problem()?;
    let problem = &resolved.problem;
    if args.theta.len() != problem.n_params() {
        return Err(CliError::Config(format!(
            "theta has {} entries but the circuit has {} parameters",
            args.theta.len(),
            problem.n_params()
        )));
    }
    if args.rank_tol.is_nan() || args.rank_tol < 0.0 {
        return Err(CliError::Config("rank-tol must be non-negative".into()));
    }
    let kinds: &[MetricChoice] = match args.kind {
        MetricChoice::All => &[MetricChoice::Fs, MetricChoice::Ite, MetricChoice::Classical],
        ref k => std::slice::from_ref(k),
    };
    let theta = &args.theta;
    writeln!(out, "{} at theta = {:?}", resolved.label, theta).map_err(io_err)?;
    for kind in kinds {
        let metric = match kind {
            MetricChoice::Fs => fubini_study_metric(&problem.circuit, theta),
            MetricChoice::Ite => ite_matrix(&problem.circuit, theta),
            MetricChoice::Classical => classical_fisher_metric(
                &problem.circuit,
                theta,
                &problem.decomposition,
                problem.prob_floor,
            ),
            MetricChoice::All => unreachable!(),
        };
        match metric {
            Ok(m) => print_metric(out, &m, args.rank_tol)?,
            // with several kinds, one undefined metric should not hide the others
            Err(e) if kinds.len() > 1 => {
                writeln!(out, "\n{}: {e}", kind_label(*kind)).map_err(io_err)?
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn kind_label(kind: MetricChoice) -> &'static str {
    match kind {
        MetricChoice::Fs => "fubini-study",
        MetricChoice::Ite => "ite",
        MetricChoice::Classical => "classical-fisher",
        MetricChoice::All => "all",
    }
}

fn print_metric(out: &mut dyn Write, m: &MetricMatrix, rank_tol: f64) -> Result<(), CliError> {
    let report = singularity_report(m, rank_tol);
    let mut text = format!("\n{}\n", m.kind.name());
    for i in 0..m.dim() {
        let row: Vec<String> = (0..m.dim())
            .map(|j| format!("{:>12.8}", m.values[(i, j)]))
            .collect();
        text.push_str(&format!("  [{}]\n", row.join(" ")));
    }
    text.push_str(&format!("determinant: {}\n", scalar(report.determinant)));
    text.push_str(&format!(
        "min_eigenvalue: {}\n",
        scalar(report.min_eigenvalue)
    ));
    text.push_str(&format!("rank: {}\n", report.rank));
    text.push_str(&format!("is_singular: {}\n", report.is_singular));
    out.write_all(text.as_bytes()).map_err(io_err)
}

/// Full precision, switching to exponent form for tiny magnitudes.
fn scalar(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn cmd_plot(args: &PlotArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let trajectories = args
        .inputs
        .iter()
        .map(|p| output::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    // validate before writing anything
    let path_svg = if args.path {
        Some(plot::path_plot(&trajectories)?)
    } else {
        None
    };
    let energy_svg = plot::energy_plot(&trajectories);

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    let write = |path: &Path, svg: &str| {
        fs::write(path, svg)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    };
    write(&args.out, &energy_svg)?;
    writeln!(out, "{}", args.out.display()).map_err(io_err)?;
    if let Some(svg) = path_svg {
        let stem = args
            .out
            .file_stem()
            .map_or("plot".into(), |s| s.to_string_lossy().into_owned());
        let path = args.out.with_file_name(format!("{stem}_path.svg"));
        write(&path, &svg)?;
        writeln!(out, "{}", path.display()).map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_presets(out: &mut dyn Write) -> Result<(), CliError> {
    for name in PresetName::ALL {
        writeln!(out, "{:<12}{}", name.as_str(), name.description()).map_err(io_err)?;
    }
    Ok(())
}
