use std::path::Path;
use std::process::{Command, Output};

use vqe_natgrad::experiments::{preset, PresetName};
use vqe_natgrad::{run, OptimizerKind};
use vqe_natgrad_cli::output;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqe-natgrad"))
        .args(args)
        .current_dir(dir)
        .env_remove("VQE_NATGRAD_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_one_csv_per_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--preset",
            "qubit-a",
            "--optimizer",
            "vanilla,natural,ite",
            "--out-dir",
            "out/",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["vanilla", "natural", "ite"] {
        let text =
            std::fs::read_to_string(dir.path().join(format!("out/qubit-a_{name}.csv"))).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "step,theta_1,theta_2,energy,grad_norm,det_metric,min_eig_metric"
        );
        assert_eq!(text.lines().count(), 302);
    }
}

#[test]
fn csv_reproduces_in_memory_trajectory_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--preset",
            "h2-a",
            "--optimizer",
            "natural",
            "--steps",
            "200",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let loaded = output::load(&dir.path().join("out/h2-a_natural.csv")).unwrap();

    let p = preset(PresetName::H2A);
    let opts = vqe_natgrad::optimizers::RunOptions {
        max_steps: 200,
        ..p.run_options()
    };
    let expected = run(&p.problem(), OptimizerKind::NaturalFS, &p.theta0, &opts).unwrap();
    assert_eq!(loaded.steps, expected.steps);
}

#[test]
fn json_output_echoes_preset_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--preset",
            "h2-a",
            "--optimizer",
            "natural",
            "--format",
            "json",
            "--steps",
            "20",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/h2-a_natural.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["preset"]["name"], "h2-a");
    assert_eq!(doc["config"]["max_steps"], 20);
    assert_eq!(doc["steps"].as_array().unwrap().len(), 21);
    assert_eq!(doc["steps"][0]["theta"].as_array().unwrap().len(), 4);
    assert_eq!(doc["terminal_reason"], "MaxSteps");
}

#[test]
fn non_converging_run_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--preset",
            "toy",
            "--optimizer",
            "natural",
            "--steps",
            "2000",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("MaxSteps after 2000 steps"));
}

#[test]
fn out_dir_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vqe-natgrad"))
        .args([
            "run",
            "--preset",
            "qubit-b",
            "--optimizer",
            "ite",
            "--steps",
            "5",
        ])
        .current_dir(dir.path())
        .env("VQE_NATGRAD_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-env/qubit-b_ite.csv").exists());
}

#[test]
fn config_file_describes_a_custom_problem() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
theta0 = [0.3, 0.2]
optimizers = ["natural"]
max_steps = 50
format = "csv"

[[hamiltonian]]
coefficient = 1.0
pauli = "Z"

[circuit]
n_qubits = 1
gates = [
    { kind = "ry", targets = [0], param_index = 0 },
    { kind = "phase", targets = [0], param_index = 1 },
]

[schedule]
kind = "inverse-step"
value = 0.2
"#;
    std::fs::write(dir.path().join("z.toml"), config).unwrap();
    let o = cli(&["run", "--config", "z.toml", "--steps", "30"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let loaded = output::load(&dir.path().join("out/custom_natural.csv")).unwrap();
    assert_eq!(loaded.steps.len(), 31);
    assert!(loaded.steps[30].energy < loaded.steps[0].energy);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--preset", "nope"][..],
        &["run", "--preset", "qubit-a", "--optimizer", "adam"],
        &["run", "--preset", "qubit-a", "--format", "xml"],
        &["run", "--preset", "qubit-a", "--theta0", "0.1"],
        &["run", "--config", "missing.toml"],
        &["run"],
        &["metric", "--preset", "h2-a", "--theta", "0.1,0.2"],
        &["frobnicate"],
    ] {
        let o = cli(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unwritable_output_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let o = cli(
        &[
            "run",
            "--preset",
            "qubit-a",
            "--steps",
            "3",
            "--out-dir",
            "blocker/sub",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn metric_reports_singularity() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &["metric", "--preset", "qubit-a", "--theta", "0,0"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("determinant: 0\n"), "{text}");
    assert!(text.contains("is_singular: true"));

    let o = cli(
        &[
            "metric",
            "--preset",
            "qubit-a",
            "--theta",
            "0.5,0.3",
            "--kind",
            "classical",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("rank: 1\n"));

    let o = cli(
        &[
            "metric",
            "--preset",
            "h2-a",
            "--theta",
            "-0.2,-0.2,0,0",
            "--kind",
            "all",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for kind in ["fubini-study", "ite", "classical-fisher"] {
        assert!(text.contains(&format!("\n{kind}\n")), "{text}");
    }
    assert!(text.contains(&format!("{:.8}", (-0.4f64).sin())));
    assert!(text.contains(&format!("{:.8}", (-0.4f64).cos())));
}

#[test]
fn plot_renders_series_and_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--preset",
            "qubit-a",
            "--optimizer",
            "vanilla,natural,ite",
            "--steps",
            "60",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let o = cli(
        &[
            "plot",
            "out/qubit-a_vanilla.csv",
            "out/qubit-a_natural.csv",
            "out/qubit-a_ite.csv",
            "--out",
            "fig/a.svg",
            "--path",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let energy = std::fs::read_to_string(dir.path().join("fig/a.svg")).unwrap();
    assert_eq!(energy.matches(r#"class="series""#).count(), 3);
    for label in ["qubit-a_vanilla", "qubit-a_natural", "qubit-a_ite"] {
        assert!(energy.contains(label));
    }
    let path = std::fs::read_to_string(dir.path().join("fig/a_path.svg")).unwrap();
    assert!(path.contains("theta_1"));
}

#[test]
fn path_plot_rejects_four_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--preset",
            "h2-a",
            "--optimizer",
            "vanilla,natural",
            "--steps",
            "10",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let o = cli(
        &[
            "plot",
            "out/h2-a_vanilla.csv",
            "out/h2-a_natural.csv",
            "--path",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("path plot requires 2 parameters"));
    assert!(!dir.path().join("energy.svg").exists());
}

#[test]
fn plot_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "step,energy\n0,x\n").unwrap();
    let o = cli(&["plot", "bad.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["plot", "absent.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn presets_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["presets"], dir.path());
    let text = stdout(&o);
    for name in ["qubit-a", "qubit-b", "h2-a", "h2-plateau", "toy"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{text}");
    }
}
