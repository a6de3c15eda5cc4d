//! Experiment runner: TOML configuration, orchestration of training and
//! evaluation, and the artifacts written to disk.

pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod report;

use std::path::Path;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use error::CliError;
pub use experiment::{execute, ExperimentReport};

/// Runs an experiment and writes every artifact under `dir`.
///
/// Returns the report together with notes about skipped plots.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<(ExperimentReport, Vec<String>), CliError> {
    let report = execute(cfg)?;
    report::write_artifacts(&report, dir)?;
    let notes = if cfg.output.plots {
        plot::emit_plots(&report, dir)?
    } else {
        Vec::new()
    };
    Ok((report, notes))
}
