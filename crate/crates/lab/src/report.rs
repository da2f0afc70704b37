//! CSV serializers.
//!
//! `report.csv` has one row per (experiment, m, epsilon). Columns that do
//! not depend on epsilon are repeated on each row; fields with no value
//! (GoF columns in a conditions-only run, gamma for `full_sum`, symmetry
//! distances below the minimum replicate count) are left empty. Floats use
//! the shortest representation that round-trips.

use std::io::Write;
use std::path::{Path, PathBuf};

use exchlab_core::checks::QuadVariant;
use exchlab_core::engine::{CellResult, ExperimentReport};
use exchlab_core::statistics::StatisticKind;

pub const REPORT_FILE: &str = "report.csv";

pub const HEADER: [&str; 20] = [
    "experiment",
    "generator",
    "statistic",
    "gamma",
    "m",
    "n_rep",
    "seed",
    "ks",
    "w1",
    "sample_mean",
    "sample_var",
    "pair_corr",
    "pair_corr_ci",
    "max_exc_eps",
    "max_exc_prob",
    "quad_var",
    "quad_eps",
    "quad_prob",
    "marg_sym_ks",
    "joint_sym_ks",
];

/// Quadratic-concentration variant reported for a statistic: the partial
/// sum of size k for `weber`, the full row otherwise.
pub fn quad_variant(kind: StatisticKind) -> QuadVariant {
    match kind {
        StatisticKind::Weber { .. } => QuadVariant::LemmaK,
        StatisticKind::FullSum => QuadVariant::TheoremM,
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Rows contributed by one cell.
pub fn cell_records(report: &ExperimentReport, cell: &CellResult) -> Vec<Vec<String>> {
    let spec = &report.spec;
    let c = &cell.conditions;
    let variant = quad_variant(spec.statistic);
    let quad = match variant {
        QuadVariant::LemmaK => &c.quad_lemma,
        QuadVariant::TheoremM => &c.quad_theorem,
    };
    let gof = cell.gof.as_ref();
    c.max_exceedance
        .iter()
        .zip(quad)
        .map(|(&(eps, exc), &(_, qp))| {
            vec![
                spec.name.clone(),
                spec.generator.family().to_string(),
                spec.statistic.name().to_string(),
                opt(spec.statistic.gamma()),
                cell.m.to_string(),
                c.n_rep.to_string(),
                cell.sample.seed.to_string(),
                opt(gof.map(|g| g.ks)),
                opt(gof.map(|g| g.wasserstein1)),
                opt(gof.map(|g| g.sample_mean)),
                opt(gof.and_then(|g| g.sample_var)),
                num(c.pair_corr.value),
                opt(c.pair_corr.ci_half_width),
                num(eps),
                num(exc),
                variant.name().to_string(),
                num(eps),
                num(qp),
                opt(c.marginal_symmetry_ks),
                opt(c.joint_sign_symmetry_ks),
            ]
        })
        .collect()
}

/// Writes the header and every row of `reports` to `out`.
pub fn write_report<'a, W: Write>(
    out: W,
    reports: impl IntoIterator<Item = &'a ExperimentReport>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for report in reports {
        for cell in &report.cells {
            for rec in cell_records(report, cell) {
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn samples_path(dir: &Path, experiment: &str, m: usize) -> PathBuf {
    dir.join(format!("samples_{experiment}_{m}.csv"))
}

/// One statistic value per line.
pub fn write_samples<W: Write>(mut out: W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use exchlab_core::engine::{run_experiment, ExperimentSpec};
    use exchlab_core::generators::{GeneratorSpec, MagnitudeRule};
    use exchlab_core::statistics::ScheduleSpec;
    use exchlab_core::Sequential;

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_report(&mut buf, []).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,generator,statistic,gamma,m,n_rep,seed,ks,w1,sample_mean,sample_var,\
             pair_corr,pair_corr_ci,max_exc_eps,max_exc_prob,quad_var,quad_eps,quad_prob,\
             marg_sym_ks,joint_sym_ks\n"
        );
    }

    #[test]
    fn one_row_per_m_and_epsilon() {
        let mut spec = ExperimentSpec::new(
            "zs",
            GeneratorSpec::ZeroSumPermutation {
                magnitudes: MagnitudeRule::Unit,
            },
            ScheduleSpec::new(vec![10, 20], 0.5).unwrap(),
            StatisticKind::FullSum,
            1,
        );
        spec.n_rep = 50;
        spec.epsilons = vec![0.5, 0.05];
        let report = run_experiment(&spec, &Sequential).unwrap();
        let mut buf = Vec::new();
        write_report(&mut buf, [&report]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        // 2 sizes x {0.05, 0.1 (verdict), 0.5}
        assert_eq!(lines.len(), 1 + 6);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), HEADER.len());
        assert_eq!(&first[..7], ["zs", "zero_sum_permutation", "full_sum", "", "10", "50", "1"]);
        assert_eq!(first[7], "0.5");
        assert_eq!(first[13], "0.05");
        assert_eq!(first[15], "theorem_m");
        // Fewer than 100 replicates: no symmetry distances.
        assert_eq!(first[18], "");
        assert_eq!(first[19], "");
    }

    #[test]
    fn samples_one_per_line() {
        let mut buf = Vec::new();
        write_samples(&mut buf, &[0.25, -1.0, 3e-20]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.25\n-1\n0.00000000000000000003\n");
    }
}
