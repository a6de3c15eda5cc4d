use std::path::PathBuf;
use std::process::ExitCode;

use cftrain::{parse_config, run_experiment, CliError, ConfigError};
use cftrain_core::training::Objective;
use clap::Parser;

/// Train counterfactual-training variants and a Vanilla baseline, evaluate
/// them, and write metrics, logs and plots.
#[derive(Debug, Parser)]
#[command(name = "cftrain", version)]
struct Args {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Global seed; falls back to CT_SEED, then to the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding [output] dir.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Validate and print the resolved config without running anything.
    #[arg(long)]
    dry_run: bool,
    /// Subset of objectives to run, e.g. full,vanilla.
    #[arg(long, value_delimiter = ',')]
    objectives: Option<Vec<Objective>>,
}

fn run(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text)?;
    let env_seed = match std::env::var("CT_SEED") {
        Ok(s) => Some(s.trim().parse::<u64>().map_err(|e| ConfigError {
            line: None,
            message: format!("CT_SEED: {e}"),
        })?),
        Err(_) => None,
    };
    if let Some(seed) = args.seed.or(env_seed) {
        cfg.seed = seed;
    }
    if let Some(dir) = args.out_dir {
        cfg.output.dir = dir;
    }
    if let Some(objectives) = args.objectives {
        cfg.training.objectives = objectives;
    }
    cfg.validate().map_err(|message| ConfigError { line: None, message })?;
    if args.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let dir = cfg.output.dir.clone();
    let (report, notes) = run_experiment(&cfg, &dir)?;
    for note in notes {
        eprintln!("note: {note}");
    }
    for v in &report.variants {
        eprintln!("{} {} clean accuracy {:.4}", v.objective, v.scenario.name(), v.clean_accuracy);
    }
    eprintln!("artifacts written to {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(if matches!(e, CliError::Config(_)) { 2 } else { 1 })
        }
    }
}
