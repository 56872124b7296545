//! End-to-end runs of the `thermoctl` binary on the bundled demos.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use thermoctl::bangbang::{verify_bangbang, BangBangReport, DEFAULT_TOLERANCE};
use thermoctl::cli::csv_io::read_control_csv;
use thermoctl::reduced_system::ControlBounds;

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(format!("{name}.json"))
}

fn thermoctl(args: &[&str], spec: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoctl"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .arg(spec)
        .env_remove("THERMOCTL_SEED")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_spec(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn variant(name: &str, from: &str, to: &str) -> String {
    let text = std::fs::read_to_string(demo(name)).unwrap();
    assert!(text.contains(from), "{from} not in {name}");
    text.replace(from, to)
}

#[test]
fn check_reports_verdicts() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["check"], &demo("proper_region"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"]["tag"], "EXISTS_PROPER_REGION");
    assert_eq!(v["kalman_rank"], 3);
    assert_eq!(v["general_position"]["holds"], true);
    assert!(dir.path().join("check.json").exists());

    let full = variant("contrast", r#"{"intervals": [[0.21, 0.54]]}"#, r#""full""#);
    let full = full.replace("[1.0, 1.0]", "[0.0, 1.0]");
    let out = thermoctl(&["check"], &write_spec(&dir, "full.json", &full), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"]["tag"], "NONEXISTENT");
}

#[test]
fn schema_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["check"], &write_spec(&dir, "bad.json", "{ not json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let typo = variant("contrast", r#""bounds""#, r#""bound""#);
    let out = thermoctl(&["solve"], &write_spec(&dir, "typo.json", &typo), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bound"));
    let negative = variant("contrast", "[1.0]", "[-1.0]");
    let out = thermoctl(&["solve"], &write_spec(&dir, "neg.json", &negative), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonexistent_solve_exits_3_with_witness() {
    let dir = TempDir::new().unwrap();
    let full = variant("contrast", r#"{"intervals": [[0.21, 0.54]]}"#, r#""full""#);
    let out = thermoctl(&["solve"], &write_spec(&dir, "full.json", &full), dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NONEXISTENT"));
}

#[test]
fn diagonal_demo_is_not_bang_bang() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["solve"], &demo("diagonal_two_mode"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["solve"]["optimal_time"].as_f64().unwrap() - 0.241749).abs() < 1e-6);
    assert_eq!(v["bang_bang"]["is_bang_bang"], false);
    for name in ["solve.json", "control.csv", "trajectory.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn proper_demo_is_bang_bang_and_bracketed() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["solve", "--oracle"], &demo("proper_region"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["bang_bang"]["is_bang_bang"], true);
    for c in v["bang_bang"]["switching_counts"].as_array().unwrap() {
        assert!(c.as_u64().unwrap() <= 2);
    }
    assert!(v["target_distance"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["oracle"]["brackets"], true);
}

#[test]
fn control_csv_round_trip_reproduces_report() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["solve"], &demo("proper_region"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let reported: BangBangReport = serde_json::from_value(v["bang_bang"].clone()).unwrap();
    let control = read_control_csv(std::fs::File::open(dir.path().join("control.csv")).unwrap()).unwrap();
    let bounds = ControlBounds::uniform(2, 1.0).unwrap();
    let again = verify_bangbang(&control, &bounds, DEFAULT_TOLERANCE);
    assert_eq!(again, reported);
    let from_json = serde_json::from_value(v["solve"]["control"].clone()).unwrap();
    assert_eq!(control, from_json);
}

#[test]
fn initial_state_in_target_needs_no_time() {
    let dir = TempDir::new().unwrap();
    let text = variant("proper_region", "[1.0, 0.5, 0.25]", "[0.0, 0.0, 0.0, 0.7]");
    let out = thermoctl(&["solve"], &write_spec(&dir, "zero.json", &text), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["solve"]["optimal_time"], 0.0);
    let csv = std::fs::read_to_string(dir.path().join("control.csv")).unwrap();
    assert_eq!(csv, "t,alpha_1,alpha_2\n");
}

#[test]
fn scan_finds_candidates_or_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["scan"], &demo("scan_half"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["candidate_count"].as_u64().unwrap() >= 1);
    assert!(dir.path().join("scan.csv").exists());
    assert!(dir.path().join("candidates.json").exists());

    let wide = variant("scan_half", "[[0.0, 0.5]]", "[[0.02, 0.98]]");
    let out = thermoctl(&["scan"], &write_spec(&dir, "wide.json", &wide), dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn scan_candidate_passes_check_when_added() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["scan"], &demo("scan_half"), dir.path());
    let best = &json(&out)["candidates"][0];
    let (x, rho) = (best["x"].as_f64().unwrap(), best["rho"].as_f64().unwrap());
    let augmented = variant("scan_half", "[[0.0, 0.5]]", &format!("[[0.0, 0.5], [{}, {}]]", x - rho, x + rho));
    let out = thermoctl(&["check"], &write_spec(&dir, "aug.json", &augmented), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["nonvanishing_couplings"]["holds"], true);
    assert_eq!(v["verdict"]["tag"], "EXISTS_PROPER_REGION");
}

#[test]
fn compare_contrasts_full_and_local_control() {
    let dir = TempDir::new().unwrap();
    let out = thermoctl(&["compare"], &demo("proper_region"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["full"]["tag"], "NONEXISTENT");
    assert_eq!(v["proper"]["is_bang_bang"], true);

    let square = variant("diagonal_two_mode", r#""full""#, r#"{"intervals": [[0.21, 0.54]]}"#);
    let out = thermoctl(&["compare"], &write_spec(&dir, "square.json", &square), dir.path());
    let v = json(&out);
    assert_eq!(v["full"]["tag"], "EXISTS_DIAGONAL_FULL");
    assert_eq!(v["full"]["is_bang_bang"], false);
    assert_eq!(v["proper"]["is_bang_bang"], true);

    let idle = square.replace("[1.0, 1.0]}", "[0.0, 0.0, 0.3]}");
    let out = thermoctl(&["compare"], &write_spec(&dir, "idle.json", &idle), dir.path());
    let v = json(&out);
    assert_eq!(v["full"]["optimal_time"], 0.0);
    assert_eq!(v["proper"]["optimal_time"], 0.0);
}

#[test]
fn seed_flag_and_env_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_thermoctl"));
        cmd.arg("solve").arg("--out-dir").arg(dir.path()).arg(demo("contrast"));
        match env {
            Some(s) => cmd.env("THERMOCTL_SEED", s),
            None => cmd.env_remove("THERMOCTL_SEED"),
        };
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        json(&out)["solve"]["optimal_time"].as_f64().unwrap()
    };
    let a = run(None, None);
    assert_eq!(a, run(None, None));
    let b = run(Some("7"), None);
    assert_eq!(b, run(None, Some("7")));
    assert!((a - b).abs() < 1e-6);
}
