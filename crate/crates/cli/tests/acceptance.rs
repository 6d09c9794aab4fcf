//! End-to-end checks of the command-line driver: exit codes, artifact files,
//! and reproducibility of the verification report.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn gate(name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("[PASS] {name}"),
        Err(payload) => {
            println!("[FAIL] {name}");
            std::panic::resume_unwind(payload);
        }
    }
}

/// Writes `contents` to a config file in `dir` and runs the binary on it,
/// directing artifacts to the same directory.
fn run_cli(dir: &Path, contents: &str, extra: &[&str]) -> Output {
    let config_path = dir.join("run.conf");
    std::fs::write(&config_path, contents).expect("write config");
    Command::new(env!("CARGO_BIN_EXE_choquard-mfg"))
        .arg(&config_path)
        .arg("--output-dir")
        .arg(dir)
        .args(extra)
        .output()
        .expect("spawn solver binary")
}

fn report(dir: &Path) -> serde_json::Value {
    let raw = std::fs::read_to_string(dir.join("report.json")).expect("read report.json");
    serde_json::from_str(&raw).expect("parse report.json")
}

#[test]
fn repeated_verification_runs_are_reproducible() {
    gate(
        "criterion 11: consecutive verification runs agree byte for byte within the time budget",
        || {
            let dir_a = tempfile::tempdir().expect("tempdir");
            let dir_b = tempfile::tempdir().expect("tempdir");
            let start = Instant::now();
            let out_a = run_cli(dir_a.path(), "", &["--mode", "verify"]);
            let elapsed = start.elapsed();
            let out_b = run_cli(dir_b.path(), "", &["--mode", "verify"]);
            assert_eq!(
                out_a.status.code(),
                Some(0),
                "first run: {}{}",
                String::from_utf8_lossy(&out_a.stdout),
                String::from_utf8_lossy(&out_a.stderr)
            );
            assert_eq!(out_b.status.code(), Some(0));
            assert!(
                elapsed.as_secs_f64() < 600.0,
                "verification took {elapsed:?}, budget is ten minutes"
            );
            assert!(String::from_utf8_lossy(&out_a.stdout).contains("all suites passed"));

            let doc_a = report(dir_a.path());
            let doc_b = report(dir_b.path());
            assert_eq!(doc_a["payload"]["all_passed"], serde_json::json!(true));
            // Numeric results must be bit-stable run to run; only timings and
            // the echoed output path may differ between the two reports.
            let bytes_a = serde_json::to_string(&doc_a["payload"]).expect("serialize payload");
            let bytes_b = serde_json::to_string(&doc_b["payload"]).expect("serialize payload");
            assert_eq!(bytes_a, bytes_b, "verification payloads differ between runs");
            assert_eq!(doc_a["artifacts"], doc_b["artifacts"]);
        },
    );
}

#[test]
fn trivial_coupling_solve_writes_uniform_fields() {
    gate(
        "cli solve: zero coupling exits 0 and writes the uniform density",
        || {
            let dir = tempfile::tempdir().expect("tempdir");
            let out = run_cli(dir.path(), "c_f = 0.0\n", &[]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "stderr: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let doc = report(dir.path());
            assert_eq!(doc["payload"]["status"].as_str(), Some("converged"));
            let lambda = doc["payload"]["solution"]["lambda"].as_f64().expect("lambda");
            assert!(lambda.abs() < 1e-10, "lambda = {lambda}");

            let csv = std::fs::read_to_string(dir.path().join("fields.csv")).expect("fields.csv");
            let mut lines = csv.lines();
            assert_eq!(lines.next(), Some("x,m,u"));
            let mut rows = 0;
            for line in lines {
                let fields: Vec<&str> = line.split(',').collect();
                assert_eq!(fields.len(), 3, "malformed row {line:?}");
                let m: f64 = fields[1].parse().expect("density column");
                let u: f64 = fields[2].parse().expect("value column");
                assert!((m - 1.0).abs() < 1e-10, "density {m} deviates from uniform");
                assert!(u.abs() < 1e-10, "value function {u} should vanish");
                rows += 1;
            }
            assert_eq!(rows, 128);
        },
    );
}

#[test]
fn rejected_configs_exit_with_code_one() {
    gate(
        "cli config: invalid exponent, unknown key, and missing file all exit 1",
        || {
            let dir = tempfile::tempdir().expect("tempdir");
            let out = run_cli(dir.path(), "gamma = 0.5\n", &[]);
            assert_eq!(out.status.code(), Some(1));
            let stderr = String::from_utf8_lossy(&out.stderr);
            assert!(stderr.contains("gamma"), "stderr should name the key: {stderr}");
            // a rejected run still leaves a report describing the rejection
            let doc = report(dir.path());
            assert_eq!(doc["payload"]["status"].as_str(), Some("config_error"));

            let out = run_cli(dir.path(), "grid_points = 64\n", &[]);
            assert_eq!(out.status.code(), Some(1));
            let stderr = String::from_utf8_lossy(&out.stderr);
            assert!(stderr.contains("grid_points"), "stderr: {stderr}");

            let out = Command::new(env!("CARGO_BIN_EXE_choquard-mfg"))
                .arg(dir.path().join("absent.conf"))
                .output()
                .expect("spawn solver binary");
            assert_eq!(out.status.code(), Some(1));
        },
    );
}

#[test]
fn unreachable_tolerance_fails_verification_with_code_three() {
    gate(
        "cli verify: unattainable tolerance exits 3 and names the failing suites",
        || {
            let dir = tempfile::tempdir().expect("tempdir");
            let out = run_cli(dir.path(), "tol = 1e-30\n", &["--mode", "verify"]);
            assert_eq!(out.status.code(), Some(3));
            let doc = report(dir.path());
            assert_eq!(doc["payload"]["all_passed"], serde_json::json!(false));
            let suites = doc["payload"]["suites"].as_array().expect("suite list");
            let failed: Vec<&str> = suites
                .iter()
                .filter(|s| s["passed"].as_bool() == Some(false))
                .map(|s| s["suite"].as_str().unwrap_or("?"))
                .collect();
            assert!(
                failed.contains(&"local_min_audit"),
                "failing suites: {failed:?}"
            );
            assert!(failed.contains(&"j_stationarity_audit"));
            for suite in suites {
                if suite["passed"].as_bool() == Some(false) {
                    let detail = suite["detail"].as_str().unwrap_or("");
                    assert!(detail.contains("did not converge"), "detail: {detail}");
                }
            }
        },
    );
}

#[test]
fn planar_scaling_run_reports_the_unbounded_regime() {
    gate(
        "cli scaling: short-range kernel slopes match theory and flag an unbounded energy",
        || {
            let dir = tempfile::tempdir().expect("tempdir");
            let config =
                "mode = scaling\ndim = 2\ncells_per_axis = 64\ngamma = 3.0\nalpha = 0.3\nc_f = 1.0\n";
            let out = run_cli(dir.path(), config, &[]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "stderr: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let doc = report(dir.path());
            let kinetic = doc["payload"]["kinetic_slope"].as_f64().expect("kinetic slope");
            let potential = doc["payload"]["potential_slope"]
                .as_f64()
                .expect("potential slope");
            assert!((kinetic / -1.5 - 1.0).abs() < 0.07, "kinetic slope {kinetic}");
            assert!(
                (potential / -1.7 - 1.0).abs() < 0.07,
                "potential slope {potential}"
            );
            assert_eq!(
                doc["payload"]["energy_sign_trend"].as_str(),
                Some("unbounded_below")
            );

            let csv = std::fs::read_to_string(dir.path().join("scaling.csv")).expect("scaling.csv");
            assert_eq!(csv.lines().next(), Some("sigma,kinetic,potential,energy"));
            assert_eq!(csv.lines().count(), 1 + 6);
        },
    );
}

#[test]
fn threshold_and_continuation_modes_write_their_artifacts() {
    gate(
        "cli threshold and continuation: small runs exit 0 with complete artifacts",
        || {
            let dir = tempfile::tempdir().expect("tempdir");
            let config = "mode = threshold\ncells_per_axis = 32\nc_f_grid = 0.0, 0.05\n";
            let out = run_cli(dir.path(), config, &[]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "stderr: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let doc = report(dir.path());
            assert_eq!(doc["payload"]["largest_convergent_c_f"].as_f64(), Some(0.05));
            let csv =
                std::fs::read_to_string(dir.path().join("threshold.csv")).expect("threshold.csv");
            assert_eq!(csv.lines().next(), Some("c_f,converged,q_norm,sup_norm,lambda"));
            assert_eq!(csv.lines().count(), 3);

            let dir = tempfile::tempdir().expect("tempdir");
            let config = "mode = continuation\ncells_per_axis = 32\nc_f = 0.0\n";
            let out = run_cli(dir.path(), config, &[]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "stderr: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let doc = report(dir.path());
            assert_eq!(doc["payload"]["aborted"], serde_json::json!(false));
            assert_eq!(doc["payload"]["all_stages_converged"], serde_json::json!(true));
            assert_eq!(doc["payload"]["stages"].as_array().map(Vec::len), Some(4));
            assert!(dir.path().join("fields.csv").exists());
        },
    );
}
