use choquard_mfg_cli::{execute, summarize, Mode, RunConfig};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Ergodic mean-field-games solver with Riesz interaction coupling.
#[derive(Parser)]
#[command(name = "choquard-mfg", version)]
struct Args {
    /// Path to a `key = value` run configuration file.
    config: PathBuf,
    /// Override the mode declared in the config
    /// (solve|continuation|scaling|threshold|verify).
    #[arg(long)]
    mode: Option<String>,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn load_config(args: &Args) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut config = RunConfig::parse_str(&text).map_err(|e| e.to_string())?;
    if let Some(mode) = &args.mode {
        config.mode = mode.parse::<Mode>().map_err(|e| e.to_string())?;
    }
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match load_config(&args) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("{message}");
            return ExitCode::from(1);
        }
    };
    let outcome = execute(&config);
    println!("{}", summarize(&outcome));
    if outcome.exit_code != 0 {
        if let Some(message) = outcome.report.payload["message"].as_str() {
            eprintln!("{message}");
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
