//! Experiment config files.
//!
//! The format is TOML. Top-level keys are global; each `[[experiment]]`
//! table becomes one [`ExperimentSpec`]:
//!
//! ```toml
//! master_seed = 20240601        # default 0; --seed overrides
//! output_dir = "out"            # default "out"; --out-dir overrides
//! threads = 4                   # hint only; --threads overrides
//!
//! [[experiment]]
//! name = "theorem_rademacher"   # unique
//! statistic = "full_sum"        # "full_sum" | "weber"
//! gamma = 0.5                   # required for weber; default 0.5 otherwise
//! m = [500, 2000, 8000]         # strictly increasing, each >= 2
//! n_rep = 10000                 # default 10000, minimum 100
//! epsilons = [0.05, 0.1, 0.5]   # default shown
//! write_samples = false         # default false
//! write_reports = true          # default true
//!
//! [experiment.generator]
//! family = "rademacher_magnitude"
//! magnitudes = { rule = "two_point", low = 1.0, high = 3.0, p_high = 0.1, seed = 7 }
//!
//! [experiment.thresholds]       # optional; defaults shown
//! cond1_tol = 0.05
//! verdict_eps = 0.1
//! max_prob = 0.01
//! alpha = 0.01
//! ```
//!
//! Generator keys by family:
//!
//! - `iid_symmetric`: `dist = "std_normal" | "rademacher" | "uniform_sym"`
//! - `rademacher_magnitude`, `zero_sum_permutation`: `magnitudes` with
//!   `rule = "unit"`, `"abs_normal"` (`seed`), `"two_point"`
//!   (`low`, `high`, `p_high`, `seed`) or `"explicit"` (`values`); default
//!   `unit`. For `zero_sum_permutation` the magnitudes are the m/2 pair sizes.
//! - `equicorrelated_gaussian`: `rho = 0.3` or `rho = { rule = "over_m", c = 3.0 }`
//! - `scale_mixture`: `delta = 0.5` or
//!   `delta = { rule = "power", scale = 1.0, exponent = -0.25 }`

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use exchlab_core::checks::Thresholds;
use exchlab_core::engine::{ExperimentSpec, OutputFlags, DEFAULT_EPSILONS, DEFAULT_N_REP};
use exchlab_core::generators::{
    DeltaRule, Family, GeneratorSpec, MagnitudeRule, RhoRule, SymmetricLaw,
};
use exchlab_core::statistics::{ScheduleSpec, StatisticKind};
use serde::Deserialize;

pub const MIN_N_REP: usize = 100;
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    pub experiments: Vec<ExperimentSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: Option<u64>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
    #[serde(default, rename = "experiment")]
    experiments: Vec<RawExperiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: String,
    statistic: String,
    gamma: Option<f64>,
    m: Vec<usize>,
    n_rep: Option<usize>,
    epsilons: Option<Vec<f64>>,
    write_samples: Option<bool>,
    write_reports: Option<bool>,
    generator: RawGenerator,
    thresholds: Option<RawThresholds>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    family: String,
    dist: Option<String>,
    magnitudes: Option<RawMagnitudes>,
    rho: Option<RawRho>,
    delta: Option<RawDelta>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
enum RawMagnitudes {
    Unit,
    AbsNormal {
        seed: u64,
    },
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
        seed: u64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawRho {
    Const(f64),
    Rule(RhoRuleTable),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
enum RhoRuleTable {
    OverM { c: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawDelta {
    Const(f64),
    Rule(DeltaRuleTable),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
enum DeltaRuleTable {
    Power { scale: f64, exponent: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThresholds {
    cond1_tol: Option<f64>,
    verdict_eps: Option<f64>,
    max_prob: Option<f64>,
    alpha: Option<f64>,
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let master_seed = raw.master_seed.unwrap_or(0);
    if raw.threads == Some(0) {
        return Err(invalid("threads", "must be >= 1"));
    }
    if raw.experiments.is_empty() {
        return Err(invalid("experiment", "config defines no experiments"));
    }
    let mut names = HashSet::new();
    let mut experiments = Vec::with_capacity(raw.experiments.len());
    for (i, exp) in raw.experiments.into_iter().enumerate() {
        let at = format!("experiment[{i}]");
        if !names.insert(exp.name.clone()) {
            return Err(invalid(
                format!("{at}.name"),
                format!("duplicate experiment name `{}`", exp.name),
            ));
        }
        experiments.push(build_experiment(&at, exp, master_seed)?);
    }
    Ok(Config {
        master_seed,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        threads: raw.threads,
        experiments,
    })
}

fn build_experiment(
    at: &str,
    raw: RawExperiment,
    master_seed: u64,
) -> Result<ExperimentSpec, ConfigError> {
    let field = |f: &str| format!("{at}.{f}");
    if raw.name.is_empty()
        || !raw
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(invalid(
            field("name"),
            "use ASCII letters, digits, `_` or `-`",
        ));
    }
    let statistic = match raw.statistic.as_str() {
        "full_sum" => StatisticKind::FullSum,
        "weber" => {
            let gamma = raw
                .gamma
                .ok_or_else(|| invalid(field("gamma"), "required for the weber statistic"))?;
            StatisticKind::weber(gamma).map_err(|e| invalid(field("gamma"), e.to_string()))?
        }
        other => {
            return Err(invalid(
                field("statistic"),
                format!("unknown statistic `{other}`"),
            ))
        }
    };
    let gamma = raw.gamma.unwrap_or(DEFAULT_GAMMA);
    let schedule =
        ScheduleSpec::new(raw.m, gamma).map_err(|e| invalid(field("m"), e.to_string()))?;
    let n_rep = raw.n_rep.unwrap_or(DEFAULT_N_REP);
    if n_rep < MIN_N_REP {
        return Err(invalid(field("n_rep"), format!("must be >= {MIN_N_REP}")));
    }
    let epsilons = raw.epsilons.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(invalid(field("epsilons"), "need one or more positive values"));
    }
    let generator = build_generator(&field("generator"), raw.generator)?;
    let thresholds = build_thresholds(&field("thresholds"), raw.thresholds)?;
    let spec = ExperimentSpec {
        name: raw.name,
        generator,
        schedule,
        statistic,
        n_rep,
        master_seed,
        epsilons,
        thresholds,
        outputs: OutputFlags {
            write_samples: raw.write_samples.unwrap_or(false),
            write_reports: raw.write_reports.unwrap_or(true),
        },
    };
    spec.validate()
        .map_err(|e| invalid(field("generator"), e.to_string()))?;
    Ok(spec)
}

fn build_generator(at: &str, raw: RawGenerator) -> Result<GeneratorSpec, ConfigError> {
    let family: Family = raw
        .family
        .parse()
        .map_err(|_| invalid(format!("{at}.family"), format!("unknown family `{}`", raw.family)))?;
    let unexpected = |key: &str, present: bool| -> Result<(), ConfigError> {
        if present {
            Err(invalid(
                format!("{at}.{key}"),
                format!("not a parameter of `{family}`"),
            ))
        } else {
            Ok(())
        }
    };
    let spec = match family {
        Family::IidSymmetric => {
            unexpected("magnitudes", raw.magnitudes.is_some())?;
            unexpected("rho", raw.rho.is_some())?;
            unexpected("delta", raw.delta.is_some())?;
            let dist = raw
                .dist
                .ok_or_else(|| invalid(format!("{at}.dist"), "required for iid_symmetric"))?;
            let law: SymmetricLaw = dist
                .parse()
                .map_err(|_| invalid(format!("{at}.dist"), format!("unknown distribution `{dist}`")))?;
            GeneratorSpec::IidSymmetric { law }
        }
        Family::RademacherMagnitude | Family::ZeroSumPermutation => {
            unexpected("dist", raw.dist.is_some())?;
            unexpected("rho", raw.rho.is_some())?;
            unexpected("delta", raw.delta.is_some())?;
            let magnitudes = match raw.magnitudes.unwrap_or(RawMagnitudes::Unit) {
                RawMagnitudes::Unit => MagnitudeRule::Unit,
                RawMagnitudes::AbsNormal { seed } => MagnitudeRule::AbsNormal { seed },
                RawMagnitudes::TwoPoint {
                    low,
                    high,
                    p_high,
                    seed,
                } => MagnitudeRule::TwoPoint {
                    low,
                    high,
                    p_high,
                    seed,
                },
                RawMagnitudes::Explicit { values } => MagnitudeRule::Explicit(values),
            };
            if family == Family::RademacherMagnitude {
                GeneratorSpec::RademacherMagnitude { magnitudes }
            } else {
                GeneratorSpec::ZeroSumPermutation { magnitudes }
            }
        }
        Family::EquicorrelatedGaussian => {
            unexpected("dist", raw.dist.is_some())?;
            unexpected("magnitudes", raw.magnitudes.is_some())?;
            unexpected("delta", raw.delta.is_some())?;
            let rho = match raw
                .rho
                .ok_or_else(|| invalid(format!("{at}.rho"), "required for equicorrelated_gaussian"))?
            {
                RawRho::Const(r) => {
                    if !(0.0..1.0).contains(&r) {
                        return Err(invalid(format!("{at}.rho"), "must lie in [0, 1)"));
                    }
                    RhoRule::Const(r)
                }
                RawRho::Rule(RhoRuleTable::OverM { c }) => {
                    if !(c.is_finite() && c >= 0.0) {
                        return Err(invalid(format!("{at}.rho.c"), "must be finite and >= 0"));
                    }
                    RhoRule::OverM { c }
                }
            };
            GeneratorSpec::EquicorrelatedGaussian { rho }
        }
        Family::ScaleMixture => {
            unexpected("dist", raw.dist.is_some())?;
            unexpected("magnitudes", raw.magnitudes.is_some())?;
            unexpected("rho", raw.rho.is_some())?;
            let delta = match raw
                .delta
                .ok_or_else(|| invalid(format!("{at}.delta"), "required for scale_mixture"))?
            {
                RawDelta::Const(d) => {
                    if !(0.0..1.0).contains(&d) {
                        return Err(invalid(format!("{at}.delta"), "must lie in [0, 1)"));
                    }
                    DeltaRule::Const(d)
                }
                RawDelta::Rule(DeltaRuleTable::Power { scale, exponent }) => {
                    if !(scale.is_finite() && scale >= 0.0 && exponent.is_finite()) {
                        return Err(invalid(
                            format!("{at}.delta"),
                            "scale must be >= 0 and exponent finite",
                        ));
                    }
                    DeltaRule::Power { scale, exponent }
                }
            };
            GeneratorSpec::ScaleMixture { delta }
        }
    };
    Ok(spec)
}

fn build_thresholds(at: &str, raw: Option<RawThresholds>) -> Result<Thresholds, ConfigError> {
    let d = Thresholds::default();
    let Some(raw) = raw else {
        return Ok(d);
    };
    let t = Thresholds {
        cond1_tol: raw.cond1_tol.unwrap_or(d.cond1_tol),
        verdict_eps: raw.verdict_eps.unwrap_or(d.verdict_eps),
        max_prob: raw.max_prob.unwrap_or(d.max_prob),
        alpha: raw.alpha.unwrap_or(d.alpha),
    };
    if !(t.cond1_tol >= 0.0 && t.cond1_tol.is_finite()) {
        return Err(invalid(format!("{at}.cond1_tol"), "must be finite and >= 0"));
    }
    if !(t.verdict_eps > 0.0 && t.verdict_eps.is_finite()) {
        return Err(invalid(format!("{at}.verdict_eps"), "must be > 0"));
    }
    if !(0.0..=1.0).contains(&t.max_prob) {
        return Err(invalid(format!("{at}.max_prob"), "must lie in [0, 1]"));
    }
    if !(t.alpha > 0.0 && t.alpha < 1.0) {
        return Err(invalid(format!("{at}.alpha"), "must lie in (0, 1)"));
    }
    Ok(t)
}
