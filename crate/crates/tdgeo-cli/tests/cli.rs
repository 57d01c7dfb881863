//! End-to-end tests of the `tdgeo` binary: exit codes, artifact contents,
//! determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdgeo"))
}

fn run_scenario(text: &str, dir: &Path) -> Output {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    bin()
        .arg("run")
        .arg(&path)
        .arg("--output-dir")
        .arg(dir)
        .arg("--quiet")
        .output()
        .unwrap()
}

fn summary_value(summary: &str, key: &str) -> f64 {
    for line in summary.lines() {
        if let Some(rest) = line.strip_prefix(&format!("{key} = ")) {
            return rest.parse().unwrap();
        }
    }
    panic!("key {key} not found in summary:\n{summary}");
}

const CIRCLE_SCENARIO: &str = r#"
schema_version = 1
task = "functionals"

[model]
name = "circle_scaling"

[initial]
t0 = 0.0
x0 = [0.0]

[interval]
t1 = 1.0

[path]
kind = "linear"
rate = [6.283185307179586]
samples = 201
"#;

#[test]
fn circle_lengths_scenario_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(CIRCLE_SCENARIO, dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    let length = summary_value(&summary, "length");
    assert!((length - std::f64::consts::PI).abs() < 1e-6, "length {length}");
    let emb = summary_value(&summary, "embedded_length");
    assert!((emb - 3.383044).abs() < 1e-4, "embedded {emb}");
    // trajectory table with header t, x1, v1
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,v1");
    assert_eq!(lines.count(), 201);
}

#[test]
fn summaries_are_bit_identical_across_runs() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    assert!(run_scenario(CIRCLE_SCENARIO, d1.path()).status.success());
    assert!(run_scenario(CIRCLE_SCENARIO, d2.path()).status.success());
    let s1 = fs::read(d1.path().join("summary.toml")).unwrap();
    let s2 = fs::read(d2.path().join("summary.toml")).unwrap();
    assert_eq!(s1, s2);
    let t1 = fs::read(d1.path().join("trajectory.csv")).unwrap();
    let t2 = fs::read(d2.path().join("trajectory.csv")).unwrap();
    assert_eq!(t1, t2);
}

#[test]
fn empty_interval_geodesic_single_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(
        r#"
schema_version = 1
task = "geodesic"

[model]
name = "euclidean"

[initial]
t0 = 2.0
x0 = [1.0, -1.0]
v0 = [0.5, 0.5]

[interval]
t1 = 2.0
"#,
        dir.path(),
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2); // header + single sample
}

#[test]
fn schema_violation_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(
        "schema_version = 1\ntask = \"geodesic\"\n[model]\nname = \"euclidean\"\n",
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("initial"), "stderr: {err}");
}

#[test]
fn dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(
        r#"
schema_version = 1
task = "geodesic"

[model]
name = "euclidean"

[initial]
t0 = 0.0
x0 = [1.0, 2.0, 3.0]
v0 = [0.0, 0.0]

[interval]
t1 = 1.0
"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x0"));
}

#[test]
fn unknown_model_exits_2_and_lists_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(
        "schema_version = 1\ntask = \"validate\"\n[model]\nname = \"moebius\"\n",
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("double_pendulum"), "stderr should list models: {err}");
}

#[test]
fn numerical_failure_exits_3() {
    // geodesic through the degenerate t = 0 slice of the scaling family
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(
        r#"
schema_version = 1
task = "geodesic"

[model]
name = "circle_scaling"

[initial]
t0 = 0.0
x0 = [0.5]
v0 = [1.0]

[interval]
t1 = 1.0
"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not positive definite"));
}

#[test]
fn validate_pendulum_reports_typos_and_denominator() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("validate")
        .arg("double_pendulum")
        .arg("--output-dir")
        .arg(dir.path())
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary = fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    assert!(summary.contains("rows_flagged"));
    assert!(summary.contains("the autodiff oracle supports m2"));
    assert!(summary.contains("m1*m2' - m1'*m2"));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("FLAG"));
    assert!(report.contains("Gamma printed vs autodiff"));
}

#[test]
fn probe_scenarios_produce_expected_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(
        r#"
schema_version = 1
task = "torsion_probe"

[model]
name = "euclidean"

[initial]
t0 = 0.0
x0 = [0.0, 0.0]
v0 = [1.0, 0.0]
w0 = [0.0, 1.0]

[probe]
eps = [0.1, 0.05, 0.025]
dotnabla = "synthetic_ab"
"#,
        dir.path(),
    );
    assert!(out.status.success());
    let summary = fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    let err = summary_value(&summary, "max_abs_error");
    assert!(err < 1e-4, "torsion probe error {err}");

    let dir2 = tempfile::tempdir().unwrap();
    let out = run_scenario(
        r#"
schema_version = 1
task = "bracket_probe"

[model]
name = "euclidean"

[initial]
t0 = 0.2
x0 = [0.4, -0.3]

[field]
name = "wave"
coeffs = [0.5, 0.8, 0.1]

[field2]
name = "rotation"
coeffs = [0.7]

[probe]
eps = [0.1, 0.05, 0.025]
"#,
        dir2.path(),
    );
    assert!(out.status.success());
    let summary = fs::read_to_string(dir2.path().join("summary.toml")).unwrap();
    let err = summary_value(&summary, "max_abs_error");
    assert!(err < 1e-4, "bracket probe error {err}");
}

#[test]
fn batch_mode_runs_scenarios_in_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("alpha.toml");
    let p2 = dir.path().join("beta.toml");
    fs::write(&p1, CIRCLE_SCENARIO).unwrap();
    fs::write(
        &p2,
        r#"
schema_version = 1
task = "flow"

[model]
name = "euclidean"

[initial]
t0 = 0.0
x0 = [0.0, 0.0]

[interval]
t1 = 1.0

[field]
name = "ramp"
coeffs = [1.0, 0.0]
"#,
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg(&p1)
        .arg(&p2)
        .arg("--output-dir")
        .arg(dir.path())
        .arg("--jobs")
        .arg("2")
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("alpha/summary.toml").exists());
    assert!(dir.path().join("beta/summary.toml").exists());
    // x' = t from 0: x(1) = 1/2
    let beta = fs::read_to_string(dir.path().join("beta/summary.toml")).unwrap();
    let x_end_line = beta
        .lines()
        .find(|l| l.starts_with("x_end = ["))
        .expect("x_end in summary");
    let first: f64 = x_end_line
        .trim_start_matches("x_end = [")
        .split(',')
        .next()
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((first - 0.5).abs() < 1e-9, "{x_end_line}");
}

#[test]
fn list_models_names_all_builtins() {
    let out = bin().arg("list-models").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "euclidean",
        "conformal_plane",
        "circle_scaling",
        "circle_rotation",
        "double_pendulum",
    ] {
        assert!(text.contains(name), "missing {name}: {text}");
    }
}

#[test]
fn repo_example_scenarios_all_run() {
    let scenario_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut found = 0;
    for entry in fs::read_dir(&scenario_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            found += 1;
            let dir = tempfile::tempdir().unwrap();
            let out = bin()
                .arg("run")
                .arg(&path)
                .arg("--output-dir")
                .arg(dir.path())
                .arg("--quiet")
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{} failed: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            assert!(dir.path().join("report.txt").exists());
        }
    }
    assert!(found >= 6, "expected the repo scenarios, found {found}");
}
