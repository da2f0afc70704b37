//! Suite orchestration: runs each experiment of a config in order and
//! writes the CSV outputs.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use exchlab_core::engine::{run_experiment_with, CellResult, ExperimentReport};
use exchlab_core::{Error, Executor};

use crate::config::Config;
use crate::report::{samples_path, write_report, write_samples, REPORT_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Statistic sample, goodness of fit and conditions.
    Run,
    /// Conditions only; GoF columns stay empty.
    Check,
}

#[derive(Debug)]
pub struct Failure {
    pub experiment: String,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct SuiteOutcome {
    /// Reports of the experiments that completed, in config order.
    pub reports: Vec<ExperimentReport>,
    /// Set when an experiment aborted; later experiments are not run.
    pub failure: Option<Failure>,
}

/// Replaces every experiment's master seed.
pub fn override_seed(config: &mut Config, seed: u64) {
    config.master_seed = seed;
    for e in &mut config.experiments {
        e.master_seed = seed;
    }
}

/// Runs the experiments in order, calling `on_cell` with the experiment
/// name and each finished cell (wall time filled in).
pub fn run_suite<E, F>(config: &Config, exec: &E, mode: Mode, mut on_cell: F) -> SuiteOutcome
where
    E: Executor + ?Sized,
    F: FnMut(&str, &CellResult),
{
    let mut outcome = SuiteOutcome::default();
    for spec in &config.experiments {
        let mut start = Instant::now();
        let result = run_experiment_with(spec, exec, mode == Mode::Run, |_, mut cell| {
            cell.wall_time = Some(start.elapsed());
            on_cell(&spec.name, &cell);
            start = Instant::now();
            cell
        });
        match result {
            Ok(report) => outcome.reports.push(report),
            Err(error) => {
                outcome.failure = Some(Failure {
                    experiment: spec.name.clone(),
                    error,
                });
                break;
            }
        }
    }
    outcome
}

/// Writes `report.csv` (experiments with `write_reports`) and the sample
/// files of experiments with `write_samples` into `dir`, creating it.
pub fn write_outputs(dir: &Path, reports: &[ExperimentReport]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = BufWriter::new(File::create(dir.join(REPORT_FILE))?);
    write_report(file, reports.iter().filter(|r| r.spec.outputs.write_reports))
        .map_err(std::io::Error::other)?;
    for report in reports.iter().filter(|r| r.spec.outputs.write_samples) {
        for cell in &report.cells {
            let path = samples_path(dir, &report.spec.name, cell.m);
            write_samples(BufWriter::new(File::create(path)?), &cell.sample.values)?;
        }
    }
    Ok(())
}
