//! Deterministic execution of experiment cells.
//!
//! Replicate `r` of the cell at row size `m` always draws its row from
//! `derive_stream(master_seed, m, r)`, and all reductions run over
//! replicate-ordered vectors, so a cell's numbers do not depend on the
//! executor or on the order in which replicates are evaluated. Rows are
//! consumed as they are produced: memory per cell is O(n_rep + m).

use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use crate::checks::{ConditionReport, RowProbe, Thresholds};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::generators::GeneratorSpec;
use crate::gof::{gof_report, GofReport, StatisticSample};
use crate::statistics::{even_prefix, k_from_gamma, ScheduleSpec, StatisticKind};
use crate::stream::derive_stream;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_N_REP: usize = 10_000;
pub const DEFAULT_EPSILONS: [f64; 3] = [0.05, 0.1, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputFlags {
    pub write_samples: bool,
    pub write_reports: bool,
}

impl Default for OutputFlags {
    fn default() -> Self {
        Self {
            write_samples: false,
            write_reports: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub generator: GeneratorSpec,
    pub schedule: ScheduleSpec,
    pub statistic: StatisticKind,
    pub n_rep: usize,
    pub master_seed: u64,
    pub epsilons: Vec<f64>,
    pub thresholds: Thresholds,
    pub outputs: OutputFlags,
}

impl ExperimentSpec {
    /// Spec with default replicate count, epsilons, thresholds and outputs.
    pub fn new(
        name: impl Into<String>,
        generator: GeneratorSpec,
        schedule: ScheduleSpec,
        statistic: StatisticKind,
        master_seed: u64,
    ) -> Self {
        Self {
            name: name.into(),
            generator,
            schedule,
            statistic,
            n_rep: DEFAULT_N_REP,
            master_seed,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            thresholds: Thresholds::default(),
            outputs: OutputFlags::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rep == 0 {
            return Err(Error::invalid("n_rep", "must be >= 1"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0))
        {
            return Err(Error::invalid("epsilons", "need one or more positive values"));
        }
        if let StatisticKind::Weber { gamma } = self.statistic {
            if gamma != self.schedule.gamma() {
                return Err(Error::invalid(
                    "gamma",
                    "weber statistic and schedule disagree on gamma",
                ));
            }
        }
        for &m in self.schedule.m_values() {
            self.generator.sampler(m).map_err(|e| e.in_cell(m))?;
        }
        Ok(())
    }

    /// Partial-sum size used at scheduled size `m` (after odd-m truncation).
    pub fn k(&self, m: usize) -> usize {
        k_from_gamma(self.schedule.gamma(), m - m % 2)
    }

    fn report_epsilons(&self) -> Vec<f64> {
        let mut eps = self.epsilons.clone();
        eps.push(self.thresholds.verdict_eps);
        eps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    /// Scheduled row size; statistics use `m - m % 2` entries.
    pub m: usize,
    pub k: usize,
    pub sample: StatisticSample,
    pub conditions: ConditionReport,
    /// `None` for condition-only runs.
    pub gof: Option<GofReport>,
    /// Filled in by callers that own a clock.
    pub wall_time: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellResult>,
    pub version: &'static str,
}

/// Runs one cell: `n_rep` rows, the statistic sample, condition estimates
/// and (when `with_gof`) the goodness-of-fit report.
pub fn run_cell_with<E: Executor + ?Sized>(
    spec: &ExperimentSpec,
    m: usize,
    seed: u64,
    exec: &E,
    with_gof: bool,
) -> Result<CellResult> {
    let inner = || -> Result<CellResult> {
        let sampler = spec.generator.sampler(m)?;
        let k = spec.k(m);
        let kind = spec.statistic;
        let per_rep = exec.map_indexed(spec.n_rep, |r| -> Result<(f64, RowProbe)> {
            let mut stream = derive_stream(seed, m, r as u64);
            let mut buf = Vec::with_capacity(m);
            sampler.fill(&mut stream, &mut buf);
            let row = even_prefix(&buf)?;
            Ok((kind.evaluate(row, k)?, RowProbe::of(row, k)?))
        });
        let mut values = Vec::with_capacity(spec.n_rep);
        let mut probes = Vec::with_capacity(spec.n_rep);
        for rep in per_rep {
            let (v, p) = rep?;
            values.push(v);
            probes.push(p);
        }
        let sample = StatisticSample::new(kind, m, values, seed)?;
        let conditions = ConditionReport::from_probes(
            m,
            k,
            &probes,
            &spec.report_epsilons(),
            spec.thresholds.alpha,
        )?;
        let gof = if with_gof {
            Some(gof_report(&sample)?)
        } else {
            None
        };
        Ok(CellResult {
            m,
            k,
            sample,
            conditions,
            gof,
            wall_time: None,
        })
    };
    inner().map_err(|e| e.in_cell(m))
}

pub fn run_cell<E: Executor + ?Sized>(
    spec: &ExperimentSpec,
    m: usize,
    seed: u64,
    exec: &E,
) -> Result<CellResult> {
    run_cell_with(spec, m, seed, exec, true)
}

/// Runs every scheduled cell in order; the first failing cell aborts.
pub fn run_experiment<E: Executor + ?Sized>(
    spec: &ExperimentSpec,
    exec: &E,
) -> Result<ExperimentReport> {
    run_experiment_with(spec, exec, true, |_, cell| cell)
}

/// As [`run_experiment`], passing each finished cell through `on_cell`
/// (e.g. to stamp wall time) before it is stored.
pub fn run_experiment_with<E, F>(
    spec: &ExperimentSpec,
    exec: &E,
    with_gof: bool,
    mut on_cell: F,
) -> Result<ExperimentReport>
where
    E: Executor + ?Sized,
    F: FnMut(usize, CellResult) -> CellResult,
{
    spec.validate()?;
    let mut cells = Vec::with_capacity(spec.schedule.m_values().len());
    for &m in spec.schedule.m_values() {
        let cell = run_cell_with(spec, m, spec.master_seed, exec, with_gof)?;
        cells.push(on_cell(m, cell));
    }
    Ok(ExperimentReport {
        spec: spec.clone(),
        cells,
        version: VERSION,
    })
}

/// Outcome of [`identity_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentitySummary {
    pub rows: usize,
    pub max_residual: f64,
    /// Largest `residual / (1 + mean |row|)`.
    pub max_ratio: f64,
    /// Row size at which `max_ratio` was attained.
    pub worst_m: usize,
}

impl IdentitySummary {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_ratio <= tol
    }
}

/// Row size of replicate `r` in an identity sweep: even sizes spread evenly
/// from 2 to `m_max`, both ends included.
pub fn identity_row_size(r: usize, n_rep: usize, m_max: usize) -> usize {
    let half = m_max / 2;
    if n_rep <= 1 {
        return m_max;
    }
    2 * (1 + r * (half - 1) / (n_rep - 1))
}

/// Evaluates the proof-identity residual on `n_rep` standard normal rows
/// whose even sizes sweep `2..=m_max`.
pub fn identity_sweep<E: Executor + ?Sized>(
    m_max: usize,
    n_rep: usize,
    seed: u64,
    exec: &E,
) -> Result<IdentitySummary> {
    use crate::generators::{RowSampler, SymmetricLaw};
    use crate::statistics::proof_identity_residual;
    use crate::stream::{derive_stream_in, Domain};

    if m_max < 2 || !m_max.is_multiple_of(2) {
        return Err(Error::invalid("m_max", "must be even and >= 2"));
    }
    if n_rep == 0 {
        return Err(Error::invalid("n_rep", "must be >= 1"));
    }
    let per_rep = exec.map_indexed(n_rep, |r| -> Result<(usize, f64, f64)> {
        let m = identity_row_size(r, n_rep, m_max);
        let sampler = RowSampler::Iid {
            law: SymmetricLaw::StdNormal,
            m,
        };
        let mut stream = derive_stream_in(Domain::Identity, seed, m, r as u64);
        let mut buf = Vec::with_capacity(m);
        sampler.fill(&mut stream, &mut buf);
        let residual = proof_identity_residual(&buf)?;
        let mean_abs = buf.iter().map(|x| x.abs()).sum::<crate::sum::NeumaierSum>().value() / m as f64;
        Ok((m, residual, residual / (1.0 + mean_abs)))
    });
    let mut summary = IdentitySummary {
        rows: n_rep,
        max_residual: 0.0,
        max_ratio: 0.0,
        worst_m: identity_row_size(0, n_rep, m_max),
    };
    for rep in per_rep {
        let (m, residual, ratio) = rep?;
        summary.max_residual = summary.max_residual.max(residual);
        if ratio > summary.max_ratio {
            summary.max_ratio = ratio;
            summary.worst_m = m;
        }
    }
    Ok(summary)
}
