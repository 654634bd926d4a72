use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amtraj")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const REST: &str = r#"
version = 1

[objective]
degree = 3
d_min = 2
d_max = 2
rho = 1.0
weights = { 2 = 1.0 }

[[waypoints]]
rows = [
  { order = 0, value = [0.0, 0.0, 0.0], fixed = true },
  { order = 1, value = [0.0, 0.0, 0.0], fixed = true },
]

[[waypoints]]
rows = [
  { order = 0, value = [0.0, 0.0, 0.0], fixed = true },
  { order = 1, value = [0.0, 0.0, 0.0], fixed = true },
]
"#;

#[test]
fn solve_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let (csv, json) = (dir.path().join("t.csv"), dir.path().join("r.json"));
    let out = run(&[
        "solve",
        path(&data("three_point.toml")),
        "--trajectory",
        path(&csv),
        "--report",
        path(&json),
        "--dt",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["termination"], "tolerance_met");
    let total = report["total_duration"].as_f64().unwrap();
    assert!((total - 2f64.sqrt()).abs() < 1e-4);

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,y,z,x_d1,y_d1,z_d1,x_d2,y_d2,z_d2"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0][1], 0.0);
    let last = rows.last().unwrap();
    assert!(last[0] <= total && total < last[0] + 0.05);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1] - 1e-12));
}

#[test]
fn repeated_runs_are_identical() {
    let a = run(&["solve", path(&data("three_point.toml"))]);
    let b = run(&["solve", path(&data("three_point.toml"))]);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn check_reports_counts() {
    let out = run(&["check", path(&data("three_point.toml"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ok: 2 segments, degree 3, 1 free rows"), "{text}");
}

#[test]
fn invalid_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, REST.replace("degree = 3", "degree = 4")).unwrap();
    let out = run(&["check", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    fs::write(&bad, "version = 1\n[objective\n").unwrap();
    assert_eq!(run(&["solve", path(&bad)]).status.code(), Some(1));
    assert_eq!(run(&["solve", path(&dir.path().join("missing.toml"))]).status.code(), Some(1));
    let good = data("three_point.toml");
    assert_eq!(run(&["solve", path(&good), "--dt", "0"]).status.code(), Some(1));
    assert_eq!(run(&["solve", path(&good), "--max-order", "4"]).status.code(), Some(1));
    assert_eq!(run(&["solve", path(&good), "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn degenerate_segment_exits_two() {
    // Equal positions with free velocities: the starting guess is at rest,
    // so the segment cost is ρT alone and has no interior minimizer.
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("rest.toml");
    fs::write(&file, REST.replace("value = [0.0, 0.0, 0.0], fixed = true },\n]", "value = [0.0, 0.0, 0.0], fixed = false },\n]")).unwrap();
    let csv = dir.path().join("t.csv");
    let out = run(&["solve", path(&file), "--trajectory", path(&csv)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!csv.exists());
}

#[test]
fn rate_subcommand() {
    let out = run(&["rate", "--instances", "3", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
}
