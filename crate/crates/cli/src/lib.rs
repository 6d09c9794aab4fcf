//! Run orchestration for the command-line binary: load a [`RunConfig`],
//! dispatch the mode, write `report.json` plus mode-specific CSVs into the
//! output directory, and map outcomes to exit codes.
//!
//! Exit codes: 0 success, 1 config error, 2 solver non-convergence or
//! runtime failure (the report is still written when possible), 3 one or
//! more verify suites failed.

pub mod config;
pub mod verify;

pub use config::{ConfigError, Mode, RunConfig};
pub use verify::SuiteOutcome;

use choquard_mfg::diagnostics::{scaling_sweep, threshold_probe, EnergyTrend};
use choquard_mfg::solver::{continuation, solve_mfg, MFGSolution};
use choquard_mfg::{Error, RieszOperator};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// Everything a run leaves behind, serialized to `report.json`.
///
/// The `config` and `payload` sections are deterministic for a fixed
/// config and seed; `timings` is wall clock and excluded from any
/// reproducibility comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub payload: Value,
    pub timings: Timings,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: u128,
}

/// A finished run: the report plus the process exit code it maps to.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: i32,
}

fn solution_summary(sol: &MFGSolution<f64>) -> Value {
    json!({
        "lambda": sol.lambda,
        "iterations": sol.iterations,
        "epsilon": sol.epsilon,
        "hjb_residual": sol.hjb_residual,
        "fp_residual": sol.fp_residual,
        "coupling_residual": sol.coupling_residual,
        "energy_value": sol.energy_value,
        "energy_reg_value": sol.energy_reg_value,
        "m_min": sol.m.min_value(),
        "m_sup": sol.m.max_norm(),
    })
}

fn trend_label(trend: EnergyTrend) -> &'static str {
    match trend {
        EnergyTrend::UnboundedBelow => "unbounded_below",
        EnergyTrend::BoundedBelow => "bounded_below",
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Full round-trip precision; downstream oracles compare these exactly.
fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fields_csv(sol: &MFGSolution<f64>) -> String {
    let spec = sol.m.spec();
    let mut out = String::new();
    out.push_str(if spec.dim() == 1 { "x,m,u\n" } else { "x,y,m,u\n" });
    for idx in 0..spec.cell_count() {
        let c = spec.cell_center::<f64>(idx);
        for axis in 0..spec.dim() {
            out.push_str(&fmt_num(c[axis]));
            out.push(',');
        }
        out.push_str(&fmt_num(sol.m.values()[idx]));
        out.push(',');
        out.push_str(&fmt_num(sol.u.values()[idx]));
        out.push('\n');
    }
    out
}

fn runtime_exit_code(err: &Error) -> i32 {
    match err {
        // Bad mode inputs are configuration mistakes, not solver failures.
        Error::InvalidParameter { .. } | Error::GridMismatch { .. } => 1,
        _ => 2,
    }
}

/// Executes the configured mode and writes all artifacts.
pub fn execute(config: &RunConfig) -> RunOutcome {
    let start = Instant::now();
    let mut artifacts = vec!["report.json".to_string()];
    let mut exit_code = 0;

    let payload = match run_mode(config, &mut artifacts, &mut exit_code) {
        Ok(payload) => payload,
        Err(RunError::Config(message)) => {
            exit_code = 1;
            json!({ "status": "config_error", "message": message })
        }
        Err(RunError::Runtime { message, code }) => {
            exit_code = code;
            json!({ "status": "runtime_error", "message": message })
        }
    };

    let report = RunReport {
        config: config.clone(),
        payload,
        timings: Timings {
            total_ms: start.elapsed().as_millis(),
        },
        artifacts,
    };

    if let Err(message) = write_report(config, &report) {
        eprintln!("{message}");
        return RunOutcome {
            report,
            exit_code: if exit_code == 0 { 2 } else { exit_code },
        };
    }
    RunOutcome { report, exit_code }
}

enum RunError {
    Config(String),
    Runtime { message: String, code: i32 },
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let code = runtime_exit_code(&e);
        if code == 1 {
            RunError::Config(e.to_string())
        } else {
            RunError::Runtime {
                message: e.to_string(),
                code,
            }
        }
    }
}

fn ensure_output_dir(config: &RunConfig) -> Result<(), RunError> {
    fs::create_dir_all(&config.output_dir).map_err(|e| RunError::Runtime {
        message: format!(
            "cannot create output directory {}: {e}",
            config.output_dir.display()
        ),
        code: 2,
    })
}

fn write_report(config: &RunConfig, report: &RunReport) -> Result<(), String> {
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| format!("cannot create output directory: {e}"))?;
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| format!("cannot serialize report: {e}"))?;
    write_text(&config.output_dir, "report.json", &text)
}

fn run_mode(
    config: &RunConfig,
    artifacts: &mut Vec<String>,
    exit_code: &mut i32,
) -> Result<Value, RunError> {
    let (spec, params, solve_config) = config.build()?;
    ensure_output_dir(config)?;
    let io_err = |message: String| RunError::Runtime { message, code: 2 };

    match config.mode {
        Mode::Solve => {
            let kernel = RieszOperator::new(spec, params.alpha)?;
            match solve_mfg(&params, &solve_config, &kernel) {
                Ok(sol) => {
                    write_text(&config.output_dir, "fields.csv", &fields_csv(&sol))
                        .map_err(io_err)?;
                    artifacts.push("fields.csv".to_string());
                    Ok(json!({ "status": "converged", "solution": solution_summary(&sol) }))
                }
                Err(failure) => {
                    *exit_code = 2;
                    let last = match &failure.last {
                        Some(sol) => {
                            write_text(&config.output_dir, "fields.csv", &fields_csv(sol))
                                .map_err(io_err)?;
                            artifacts.push("fields.csv".to_string());
                            solution_summary(sol)
                        }
                        None => Value::Null,
                    };
                    Ok(json!({
                        "status": "diverged",
                        "message": failure.message,
                        "residual_history": failure.residual_history,
                        "last": last,
                    }))
                }
            }
        }
        Mode::Continuation => {
            let kernel = RieszOperator::new(spec, params.alpha)?;
            let run = continuation(&params, &solve_config, &kernel)?;
            let stages: Vec<Value> = run
                .stages
                .iter()
                .map(|stage| match &stage.outcome {
                    Ok(sol) => json!({
                        "epsilon": stage.epsilon,
                        "status": "converged",
                        "solution": solution_summary(sol),
                    }),
                    Err(failure) => json!({
                        "epsilon": stage.epsilon,
                        "status": "diverged",
                        "message": failure.message,
                    }),
                })
                .collect();
            if let Some(sol) = run.final_solution() {
                write_text(&config.output_dir, "fields.csv", &fields_csv(sol))
                    .map_err(io_err)?;
                artifacts.push("fields.csv".to_string());
            }
            let converged_all = run.stages.iter().all(|s| s.outcome.is_ok());
            if !converged_all {
                *exit_code = 2;
            }
            Ok(json!({
                "aborted": run.aborted,
                "all_stages_converged": converged_all,
                "stages": stages,
                "stage_diffs": run.stage_diffs(),
            }))
        }
        Mode::Scaling => {
            let kernel = RieszOperator::new(spec, params.alpha)?;
            let report = scaling_sweep(&params, &kernel, &config.sigma_list)?;
            let mut csv = String::from("sigma,kinetic,potential,energy\n");
            for i in 0..report.sigma_list.len() {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_num(report.sigma_list[i]),
                    fmt_num(report.kinetic_values[i]),
                    fmt_num(report.potential_values[i]),
                    fmt_num(report.energy_values[i]),
                ));
            }
            write_text(&config.output_dir, "scaling.csv", &csv).map_err(io_err)?;
            artifacts.push("scaling.csv".to_string());
            Ok(json!({
                "kinetic_slope": report.kinetic_slope,
                "potential_slope": report.potential_slope,
                "energy_sign_trend": trend_label(report.energy_sign_trend),
                "points": report.sigma_list.len(),
            }))
        }
        Mode::Threshold => {
            let kernel = RieszOperator::new(spec, params.alpha)?;
            let report = threshold_probe(&params, &kernel, &config.c_f_grid, &solve_config)?;
            let mut csv = String::from("c_f,converged,q_norm,sup_norm,lambda\n");
            let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            for row in &report.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_num(row.c_f),
                    row.converged,
                    opt(row.q_norm),
                    opt(row.sup_norm),
                    opt(row.lambda),
                ));
            }
            write_text(&config.output_dir, "threshold.csv", &csv).map_err(io_err)?;
            artifacts.push("threshold.csv".to_string());
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|row| {
                    json!({
                        "c_f": row.c_f,
                        "converged": row.converged,
                        "q_norm": row.q_norm,
                        "sup_norm": row.sup_norm,
                        "lambda": row.lambda,
                    })
                })
                .collect();
            Ok(json!({
                "largest_convergent_c_f": report.largest_convergent_c_f,
                "rows": rows,
            }))
        }
        Mode::Verify => {
            let outcomes = verify::verify_all(config).map_err(RunError::Config)?;
            let all_passed = outcomes.iter().all(|o| o.passed);
            if !all_passed {
                *exit_code = 3;
            }
            Ok(json!({
                "all_passed": all_passed,
                "suites": outcomes,
            }))
        }
    }
}

/// One-line human summary for stdout.
pub fn summarize(outcome: &RunOutcome) -> String {
    let payload = &outcome.report.payload;
    match outcome.report.config.mode {
        Mode::Solve => match payload["status"].as_str() {
            Some("converged") => format!(
                "converged in {} outer iterations, lambda = {}",
                payload["solution"]["iterations"], payload["solution"]["lambda"]
            ),
            Some("diverged") => format!(
                "diverged: {}",
                payload["message"].as_str().unwrap_or("solver failure")
            ),
            _ => format!(
                "failed: {}",
                payload["message"].as_str().unwrap_or("configuration rejected")
            ),
        },
        Mode::Continuation => format!(
            "{} stages, aborted = {}",
            payload["stages"].as_array().map(Vec::len).unwrap_or(0),
            payload["aborted"]
        ),
        Mode::Scaling => format!(
            "kinetic slope {}, potential slope {}, trend {}",
            payload["kinetic_slope"], payload["potential_slope"], payload["energy_sign_trend"]
        ),
        Mode::Threshold => format!(
            "largest convergent coupling: {}",
            payload["largest_convergent_c_f"]
        ),
        Mode::Verify => {
            let mut line = String::new();
            if let Some(suites) = payload["suites"].as_array() {
                for suite in suites {
                    let mark = if suite["passed"].as_bool() == Some(true) {
                        "pass"
                    } else {
                        "FAIL"
                    };
                    let _ = writeln!(
                        line,
                        "{mark}  {}: {}",
                        suite["suite"].as_str().unwrap_or("?"),
                        suite["detail"].as_str().unwrap_or("")
                    );
                }
            }
            line.push_str(if payload["all_passed"].as_bool() == Some(true) {
                "all suites passed"
            } else {
                "verification FAILED"
            });
            line
        }
    }
}
