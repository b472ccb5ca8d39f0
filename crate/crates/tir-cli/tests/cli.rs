//! End-to-end tests of the `tir-ipw` binary: determinism, output contracts,
//! and serialization round-trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tir-ipw"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// A small two-group scenario that exercises both follow-up families.
const SCENARIO: &str = r#"
seed = 7

[grid]
step_minutes = 30.0
tau_days = 2.0

[kernel]
sigma = 35.0

[missing]
mean_wait_minutes = 300.0

[[groups]]
label = "a"
n = 32
[groups.mean]
kind = "parametric"
baseline = 150.0
decay_amplitude = -25.0
decay_rate_per_day = 0.8
daily_amplitude = 10.0
phase = 0.0
[groups.followup]
kind = "non-informative"

[[groups]]
label = "b"
n = 32
[groups.mean]
kind = "parametric"
baseline = 120.0
decay_amplitude = 20.0
decay_rate_per_day = 0.8
daily_amplitude = 10.0
phase = 0.0
[groups.followup]
kind = "transformed"
scale = 8.0
mixture_p = 1.0
mean_shift = -3.0
"#;

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

/// Simulates the scenario once and returns the workspace holding `data/`.
fn simulated_workspace() -> Workspace {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    fs::write(root.join("scenario.toml"), SCENARIO).unwrap();
    run_ok(
        &["simulate", "--scenario", "scenario.toml", "--out", "data"],
        &root,
    );
    Workspace { _tmp: tmp, root }
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn identical_seeds_give_byte_identical_outputs() {
    let ws = simulated_workspace();
    run_ok(
        &["simulate", "--scenario", "scenario.toml", "--out", "data2"],
        &ws.root,
    );
    let first = read_dir_bytes(&ws.root.join("data"));
    let second = read_dir_bytes(&ws.root.join("data2"));
    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between identical runs");
    }

    for out in ["est1", "est2"] {
        run_ok(
            &[
                "estimate",
                "--readings",
                "data/a_readings.csv",
                "--followups",
                "data/a_followups.csv",
                "--tau-days",
                "2",
                "--step-minutes",
                "30",
                "--mode",
                "km",
                "--bootstrap-B",
                "20",
                "--seed",
                "11",
                "--out",
                out,
            ],
            &ws.root,
        );
    }
    assert_eq!(
        read_dir_bytes(&ws.root.join("est1")),
        read_dir_bytes(&ws.root.join("est2"))
    );
}

#[test]
fn estimates_partition_to_one_and_round_trip() {
    let ws = simulated_workspace();
    run_ok(
        &[
            "estimate",
            "--readings",
            "data/b_readings.csv",
            "--followups",
            "data/b_followups.csv",
            "--ranges",
            "standard3",
            "--tau-days",
            "2",
            "--step-minutes",
            "30",
            "--mode",
            "km",
            "--bootstrap-B",
            "20",
            "--seed",
            "4",
            "--out",
            "est",
        ],
        &ws.root,
    );

    // partition of unity per (method, tau)
    let mut reader = csv::Reader::from_path(ws.root.join("est/estimates.csv")).unwrap();
    let mut by_method: std::collections::BTreeMap<String, f64> = Default::default();
    let mut csv_rows: Vec<(String, String, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let r = record.unwrap();
        let estimate: f64 = r[3].parse().unwrap();
        *by_method.entry(r[0].to_string()).or_insert(0.0) += estimate;
        let numbers: Vec<f64> = (2..7).map(|i| r[i].parse().unwrap()).collect();
        csv_rows.push((r[0].to_string(), r[1].to_string(), numbers));
    }
    assert!(!by_method.is_empty());
    for (method, total) in &by_method {
        assert!(
            (total - 1.0).abs() < 1e-12,
            "method {method} partition sums to {total}"
        );
    }

    // CSV numbers re-ingested through the JSON path are identical
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.root.join("est/estimates.json")).unwrap())
            .unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), csv_rows.len());
    for (row, (method, range, numbers)) in rows.iter().zip(&csv_rows) {
        assert_eq!(row["method"].as_str().unwrap(), method);
        assert_eq!(row["range"].as_str().unwrap(), range);
        let json_numbers = [
            row["tau_days"].as_f64().unwrap(),
            row["estimate"].as_f64().unwrap(),
            row["se"].as_f64().unwrap(),
            row["ci_lo"].as_f64().unwrap(),
            row["ci_hi"].as_f64().unwrap(),
        ];
        for (a, b) in numbers.iter().zip(json_numbers) {
            assert_eq!(*a, b, "CSV and JSON disagree for {method} {range}");
        }
    }
}

#[test]
fn compare_same_data_accepts_the_null_and_reports_df() {
    let ws = simulated_workspace();
    // the same dataset under three labels: all contrasts are exactly zero
    run_ok(
        &[
            "compare",
            "--group",
            "x=data/a_readings.csv,data/a_followups.csv",
            "--group",
            "y=data/a_readings.csv,data/a_followups.csv",
            "--group",
            "z=data/a_readings.csv,data/a_followups.csv",
            "--method",
            "naive",
            "--tau-days",
            "2",
            "--step-minutes",
            "30",
            "--bootstrap-B",
            "20",
            "--seed",
            "9",
            "--out",
            "cmp",
        ],
        &ws.root,
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.root.join("cmp/report.json")).unwrap())
            .unwrap();
    assert_eq!(json["groups"].as_array().unwrap().len(), 3);
    for block in json["comparisons"].as_array().unwrap() {
        for rc in block["ranges"].as_array().unwrap() {
            assert_eq!(rc["df"].as_u64().unwrap(), 2, "K = 3 groups means df = 2");
            for d in rc["contrast"].as_array().unwrap() {
                assert_eq!(d.as_f64().unwrap(), 0.0);
            }
            let p = rc["p_value"].as_f64().unwrap();
            assert!(p > 0.99, "identical groups should give p near 1, got {p}");
        }
    }
}

#[test]
fn errors_exit_nonzero_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["estimate", "--followups", "missing.csv"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error"), "stderr was: {stderr}");
}

#[test]
fn config_file_supplies_flags() {
    let ws = simulated_workspace();
    fs::write(
        ws.root.join("run.toml"),
        "readings = \"data/a_readings.csv\"\nfollowups = \"data/a_followups.csv\"\n\
         tau_days = 2\nstep_minutes = 30.0\nmode = \"km\"\nbootstrap_b = 20\nseed = 11\nout = \"from_config\"\n",
    )
    .unwrap();
    run_ok(&["estimate", "--config", "run.toml"], &ws.root);
    run_ok(
        &[
            "estimate",
            "--readings",
            "data/a_readings.csv",
            "--followups",
            "data/a_followups.csv",
            "--tau-days",
            "2",
            "--step-minutes",
            "30",
            "--mode",
            "km",
            "--bootstrap-B",
            "20",
            "--seed",
            "11",
            "--out",
            "from_flags",
        ],
        &ws.root,
    );
    assert_eq!(
        read_dir_bytes(&ws.root.join("from_config")),
        read_dir_bytes(&ws.root.join("from_flags")),
        "config file and flags must be equivalent"
    );
}
