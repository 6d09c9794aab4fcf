//! Property suite behind `mode = verify`.
//!
//! Eight independent suites, run sequentially, each reporting pass/fail
//! with a one-line detail. The coupled-solve audits honor the configured
//! tolerance, so an unattainable `tol` fails those suites rather than being
//! silently rounded away.

use crate::config::RunConfig;
use choquard_mfg::diagnostics::hls_invariance_audit;
use choquard_mfg::energy::interpolation_slack;
use choquard_mfg::fp::solve_fp;
use choquard_mfg::hamiltonian::legendre_check;
use choquard_mfg::hjb::solve_hjb;
use choquard_mfg::solver::{
    solve_mfg, verify_j_stationarity, verify_local_min, MFGSolution, SolveConfig,
};
use choquard_mfg::{GridSpec, MFGParams, Mollifier, RieszOperator, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// One suite's verdict.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub passed: bool,
    pub detail: String,
}

type SuiteResult = Result<String, String>;

fn grid_identities(spec: GridSpec, seed: u64) -> SuiteResult {
    let uniform = ScalarField::constant(spec, 1.0f64);
    let mass = uniform.integrate();
    if (mass - 1.0).abs() > 1e-12 {
        return Err(format!("uniform density has mass {mass}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = ScalarField::from_fn(spec, |_: &[f64]| rng.random_range(-1.0..1.0));
    // The discrete Laplacian is defined as div of grad; the identity must
    // hold bitwise, not merely to rounding.
    let defect = field
        .laplacian()
        .zip_with(&field.gradient().divergence(), |a, b| a - b)
        .max_norm();
    if defect != 0.0 {
        return Err(format!("laplacian vs div grad defect {defect}"));
    }
    if !field.gradient().boundary_faces_are_zero() {
        return Err("gradient leaked through the boundary".to_string());
    }
    let flat = ScalarField::constant(spec, 3.25f64).gradient().max_norm();
    if flat != 0.0 {
        return Err(format!("constant field has gradient {flat}"));
    }
    Ok(format!(
        "mass, laplacian factorization, and boundary seals hold on N = {}",
        spec.cells_per_axis()
    ))
}

fn legendre_gate(params: &MFGParams<f64>) -> SuiteResult {
    // Duality between the exponent pair is a radial scalar property, so it
    // is probed on the 1D axis regardless of the configured dimension.
    let line = MFGParams::new(1, params.gamma, params.c_h, 0.0, 0.5, 0.0)
        .map_err(|e| e.to_string())?;
    let q_samples: Vec<Vec<f64>> = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]
        .iter()
        .map(|q| vec![*q])
        .collect();
    let gap = legendre_check(&line, &q_samples, 4.0, 8001).map_err(|e| e.to_string())?;
    if gap < 1e-6 {
        Ok(format!("duality gap {gap:.3e}"))
    } else {
        Err(format!("duality gap {gap:.3e} exceeds 1e-6"))
    }
}

fn fp_gibbs() -> SuiteResult {
    let mut errors = Vec::new();
    for n in [128usize, 256] {
        let spec = GridSpec::new(1, n).map_err(|e| e.to_string())?;
        let psi = ScalarField::from_fn(spec, |x: &[f64]| (2.0 * PI * x[0]).cos());
        let sol = solve_fp(&psi.gradient(), 1e-8).map_err(|e| e.to_string())?;
        let raw = psi.map(|v| (-v).exp());
        let mass = raw.integrate();
        let mut exact = raw;
        exact.scale(1.0 / mass);
        errors.push(sol.m.zip_with(&exact, |a, b| a - b).max_norm());
    }
    let ratio = errors[0] / errors[1];
    if (1.6..=2.6).contains(&ratio) {
        Ok(format!("halving ratio {ratio:.3}"))
    } else {
        Err(format!("halving ratio {ratio:.3} outside [1.6, 2.6]"))
    }
}

fn hjb_manufactured() -> SuiteResult {
    let params = MFGParams::new(1, 2.0, 1.0, 0.0, 0.5, 0.0).map_err(|e| e.to_string())?;
    let mut errors = Vec::new();
    for n in [256usize, 512] {
        let spec = GridSpec::new(1, n).map_err(|e| e.to_string())?;
        let amp = 0.01;
        let f = ScalarField::from_fn(spec, |x: &[f64]| {
            let grad = amp * PI * (PI * x[0]).sin();
            amp * PI * PI * (PI * x[0]).cos() + grad * grad
        });
        let sol = solve_hjb(&f, &params, 1e-11, 80).map_err(|e| e.to_string())?;
        let exact =
            ScalarField::from_fn(spec, |x: &[f64]| amp * (PI * x[0]).cos()).without_mean();
        errors.push(sol.u.zip_with(&exact, |a, b| a - b).max_norm());
    }
    let ratio = errors[0] / errors[1];
    if (1.6..=4.4).contains(&ratio) {
        Ok(format!("halving ratio {ratio:.3}"))
    } else {
        Err(format!("halving ratio {ratio:.3} outside [1.6, 4.4]"))
    }
}

fn interpolation(spec: GridSpec, params: &MFGParams<f64>, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for trial in 0..500 {
        let m = ScalarField::from_fn(spec, |_: &[f64]| {
            if rng.random_range(0.0..1.0) < 0.2 {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            }
        });
        if m.integrate() == 0.0 {
            continue;
        }
        let slack = interpolation_slack(&m, params).map_err(|e| e.to_string())?;
        worst = worst.min(slack);
        if slack < -1e-12 {
            return Err(format!("trial {trial}: slack {slack}"));
        }
    }
    Ok(format!("minimum slack {worst:.3e} over 500 fields"))
}

fn hls_invariance(spec: GridSpec, alpha: f64) -> SuiteResult {
    let sigmas = [0.1, 0.15, 0.2, 0.25, 0.3];
    let report = hls_invariance_audit(&[spec], alpha, &sigmas).map_err(|e| e.to_string())?;
    let spread = report.max_spread_fraction();
    if spread < 0.1 {
        Ok(format!("ratio spread {spread:.4}"))
    } else {
        Err(format!("ratio spread {spread:.4} exceeds 10%"))
    }
}

fn coupled_solve(
    spec: GridSpec,
    params: &MFGParams<f64>,
    solve: &SolveConfig<f64>,
) -> Result<(MFGSolution<f64>, RieszOperator<f64>), String> {
    let kernel = RieszOperator::new(spec, params.alpha).map_err(|e| e.to_string())?;
    let sol = solve_mfg(params, solve, &kernel)
        .map_err(|failure| format!("coupled solve did not converge: {failure}"))?;
    Ok((sol, kernel))
}

fn local_min_audit(
    sol: &MFGSolution<f64>,
    kernel: &RieszOperator<f64>,
    params: &MFGParams<f64>,
    seed: u64,
) -> SuiteResult {
    let report =
        verify_local_min(sol, kernel, params, 50, 1e-2, seed).map_err(|e| e.to_string())?;
    if report.violations == 0 && report.skipped == 0 {
        Ok(format!("minimum energy gap {:.3e}", report.min_gap))
    } else {
        Err(format!(
            "{} violations, {} skipped, min gap {:.3e}",
            report.violations, report.skipped, report.min_gap
        ))
    }
}

fn j_stationarity_audit(
    sol: &MFGSolution<f64>,
    kernel: &RieszOperator<f64>,
    params: &MFGParams<f64>,
    seed: u64,
) -> SuiteResult {
    let eta = Mollifier::new(kernel.spec(), params.epsilon).map_err(|e| e.to_string())?;
    let report = verify_j_stationarity(sol, kernel, &eta, params, 30, seed)
        .map_err(|e| e.to_string())?;
    if report.violations == 0 {
        Ok(format!("minimum gap {:.3e}", report.min_gap))
    } else {
        Err(format!(
            "{} violations, min gap {:.3e}",
            report.violations, report.min_gap
        ))
    }
}

/// Runs every suite against the configured grid, parameters, and
/// tolerances. Infrastructure problems (an unbuildable config) surface as
/// `Err`; individual suite failures are recorded in the outcomes.
pub fn verify_all(config: &RunConfig) -> Result<Vec<SuiteOutcome>, String> {
    let (spec, params, solve) = config.build().map_err(|e| e.to_string())?;
    let mut outcomes = Vec::new();
    let mut record = |suite: &str, result: SuiteResult| {
        let (passed, detail) = match result {
            Ok(detail) => (true, detail),
            Err(detail) => (false, detail),
        };
        outcomes.push(SuiteOutcome {
            suite: suite.to_string(),
            passed,
            detail,
        });
    };

    record("grid_identities", grid_identities(spec, config.rng_seed));
    record("legendre_gate", legendre_gate(&params));
    record("fp_gibbs", fp_gibbs());
    record("hjb_manufactured", hjb_manufactured());
    record(
        "interpolation",
        interpolation(spec, &params, config.rng_seed),
    );
    record("hls_invariance", hls_invariance(spec, params.alpha));

    // The two audits share one coupled solve at the configured tolerance.
    match coupled_solve(spec, &params, &solve) {
        Ok((sol, kernel)) => {
            record(
                "local_min_audit",
                local_min_audit(&sol, &kernel, &params, config.rng_seed),
            );
            record(
                "j_stationarity_audit",
                j_stationarity_audit(&sol, &kernel, &params, config.rng_seed + 1),
            );
        }
        Err(message) => {
            record("local_min_audit", Err(message.clone()));
            record("j_stationarity_audit", Err(message));
        }
    }
    Ok(outcomes)
}
