//! Config-driven experiments that turn the limit statements into finite-size
//! convergence diagnostics, and their result records.

mod chaos;
mod common;
mod config;
mod diagnostics;
mod limits;
mod records;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use chaos::{run_gibbs, run_gmc};
pub use config::{ExperimentConfig, ExperimentKind, OutputFormat, TestFunction};
pub use diagnostics::{run_ergodic, run_green_bounds, run_heatkernel};
pub use limits::{run_covariance_limits, run_lclt, run_wick_scaling};
pub use records::{numeric_digest, read_records_csv, write_records, ResultRecord, CSV_HEADER};

use crate::error::Result;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    log::info!("running {} from {}", cfg.experiment, cfg.path.display());
    match cfg.experiment {
        ExperimentKind::Lclt => run_lclt(cfg),
        ExperimentKind::CovarianceLimits => run_covariance_limits(cfg),
        ExperimentKind::WickScaling => run_wick_scaling(cfg),
        ExperimentKind::Gmc => run_gmc(cfg),
        ExperimentKind::Gibbs => run_gibbs(cfg),
        ExperimentKind::GreenBounds => run_green_bounds(cfg),
        ExperimentKind::Ergodic => run_ergodic(cfg),
        ExperimentKind::HeatKernel => run_heatkernel(cfg),
    }
}

/// Output path: the configured one, or `<config stem>.<csv|json>` beside the config.
pub fn output_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| {
        let ext = match cfg.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        cfg.path.with_extension(ext)
    })
}

/// Runs the experiment and writes its records, returning the output path.
pub fn run_to_file(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let records = run_experiment(cfg)?;
    let path = output_path(cfg);
    write_to(&records, cfg.format, &path)?;
    Ok(path)
}

pub fn write_to(records: &[ResultRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_records(records, format, &mut out)?;
    std::io::Write::flush(&mut out)?;
    Ok(())
}
