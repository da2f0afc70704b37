//! Monte Carlo estimates of the three limit conditions and the two symmetry
//! properties at a fixed row size.
//!
//! The conditions are asymptotic in m, so each estimate is reported per m
//! and judged against fixed finite thresholds ([`Thresholds`]); a sweep over
//! the schedule shows the trend.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::generators::GeneratorSpec;
use crate::gof::{ks_two_sample, ks_two_sample_critical};
use crate::statistics::{even_prefix, k_from_gamma};
use crate::stream::{derive_stream_in, Domain};
use crate::sum::NeumaierSum;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Symmetry distances need at least this many replicates.
pub const MIN_SYMMETRY_REPS: usize = 100;

/// Normalization of the quadratic-concentration condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadVariant {
    /// `(1/k) sum_{i<=k} X_i^2`.
    LemmaK,
    /// `(1/m) sum_{i<=m} X_i^2`.
    TheoremM,
}

impl QuadVariant {
    pub fn name(self) -> &'static str {
        match self {
            QuadVariant::LemmaK => "lemma_k",
            QuadVariant::TheoremM => "theorem_m",
        }
    }
}

impl fmt::Display for QuadVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: Option<f64>,
    pub ci_half_width: Option<f64>,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("n_rep", "no replicates"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<NeumaierSum>().value() / n;
        let std_err = (values.len() >= 2).then(|| {
            let ss = values
                .iter()
                .map(|x| (x - mean) * (x - mean))
                .sum::<NeumaierSum>()
                .value();
            libm::sqrt(ss / (n - 1.0) / n)
        });
        Ok(Self {
            value: mean,
            std_err,
            ci_half_width: std_err.map(|se| Z_95 * se),
        })
    }

    /// Whether `target` lies inside the 95% interval.
    pub fn covers(&self, target: f64) -> bool {
        self.ci_half_width
            .is_some_and(|hw| (self.value - target).abs() <= hw)
    }
}

/// Everything the condition estimators need from one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowProbe {
    /// Mean of `X_{2j-1} X_{2j}` over the `floor(m/2)` disjoint pairs.
    pub pair_mean: f64,
    /// `X_1 X_2`.
    pub pair_first: f64,
    /// `X_{ceil(m/2)} X_m`.
    pub pair_last: f64,
    /// `max_i |X_i| / sqrt(m)`.
    pub max_abs_scaled: f64,
    pub mean_sq_k: f64,
    pub mean_sq_m: f64,
    pub first: f64,
    /// `(1/sqrt(m)) sum X_i`.
    pub full_sum: f64,
    /// Full sum of the row with its second half negated; `None` for odd m.
    pub flipped_full_sum: Option<f64>,
}

impl RowProbe {
    pub fn of(values: &[f64], k: usize) -> Result<Self> {
        let m = values.len();
        if m < 2 {
            return Err(Error::invalid("m", "probes need m >= 2"));
        }
        if k == 0 || k > m {
            return Err(Error::invalid("k", "need 1 <= k <= m"));
        }
        let pairs = m / 2;
        let pair_mean = values
            .chunks_exact(2)
            .map(|p| p[0] * p[1])
            .sum::<NeumaierSum>()
            .value()
            / pairs as f64;
        let sqrt_m = libm::sqrt(m as f64);
        let max_abs = values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let sq_k = values[..k].iter().map(|x| x * x).sum::<NeumaierSum>();
        let sq_m = values[k..]
            .iter()
            .fold(sq_k, |mut acc, x| {
                acc.add(x * x);
                acc
            });
        let half = m / 2;
        let head = values[..half].iter().sum::<NeumaierSum>();
        let full = values[half..].iter().fold(head, |mut acc, &x| {
            acc.add(x);
            acc
        });
        let flipped = m.is_multiple_of(2).then(|| {
            values[half..]
                .iter()
                .fold(head, |mut acc, &x| {
                    acc.add(-x);
                    acc
                })
                .value()
                / sqrt_m
        });
        Ok(Self {
            pair_mean,
            pair_first: values[0] * values[1],
            pair_last: values[m.div_ceil(2) - 1] * values[m - 1],
            max_abs_scaled: max_abs / sqrt_m,
            mean_sq_k: sq_k.value() / k as f64,
            mean_sq_m: sq_m.value() / m as f64,
            first: values[0],
            full_sum: full.value() / sqrt_m,
            flipped_full_sum: flipped,
        })
    }
}

/// Fraction of `values` strictly above `eps`.
fn exceed_fraction(values: impl Iterator<Item = f64>, eps: f64) -> f64 {
    let (mut hits, mut n) = (0usize, 0usize);
    for v in values {
        n += 1;
        if v > eps {
            hits += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

pub fn pair_correlation(probes: &[RowProbe]) -> Result<Estimate> {
    if probes.len() < 2 {
        return Err(Error::invalid("n_rep", "pair correlation needs n_rep >= 2"));
    }
    let v: Vec<f64> = probes.iter().map(|p| p.pair_mean).collect();
    Estimate::from_values(&v)
}

pub fn max_exceedance(probes: &[RowProbe], eps: f64) -> f64 {
    exceed_fraction(probes.iter().map(|p| p.max_abs_scaled), eps)
}

pub fn quadratic_concentration(probes: &[RowProbe], eps: f64, variant: QuadVariant) -> f64 {
    exceed_fraction(
        probes.iter().map(|p| {
            let ms = match variant {
                QuadVariant::LemmaK => p.mean_sq_k,
                QuadVariant::TheoremM => p.mean_sq_m,
            };
            (ms - 1.0).abs()
        }),
        eps,
    )
}

/// Splits replicate-ordered values into even- and odd-indexed halves, so the
/// two KS samples come from disjoint, independent replicate sets.
fn split_even_odd(values: impl Iterator<Item = f64>) -> (Vec<f64>, Vec<f64>) {
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for (i, v) in values.enumerate() {
        if i % 2 == 0 {
            even.push(v);
        } else {
            odd.push(v);
        }
    }
    (even, odd)
}

/// Two-sample KS between `{X_1}` on even replicates and `{-X_1}` on odd
/// replicates. Takes replicate-ordered first coordinates.
pub fn marginal_symmetry_ks_from(first_coords: &[f64]) -> Result<f64> {
    if first_coords.len() < MIN_SYMMETRY_REPS {
        return Err(Error::invalid("n_rep", "symmetry check needs n_rep >= 100"));
    }
    let (a, b) = split_even_odd(first_coords.iter().copied());
    let neg: Vec<f64> = b.iter().map(|x| -x).collect();
    ks_two_sample(&a, &neg)
}

/// Two-sample KS between full sums on even replicates and full sums of the
/// half-flipped rows on odd replicates. Takes replicate-ordered pairs
/// `(full_sum, flipped_full_sum)`.
pub fn joint_sign_symmetry_ks_from(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < MIN_SYMMETRY_REPS {
        return Err(Error::invalid("n_rep", "symmetry check needs n_rep >= 100"));
    }
    let mut plain = Vec::with_capacity(pairs.len() / 2 + 1);
    let mut flipped = Vec::with_capacity(pairs.len() / 2);
    for (i, &(full, flip)) in pairs.iter().enumerate() {
        if i % 2 == 0 {
            plain.push(full);
        } else {
            flipped.push(flip);
        }
    }
    ks_two_sample(&plain, &flipped)
}

/// Critical value shared by both symmetry distances at `n_rep` replicates.
pub fn symmetry_critical(n_rep: usize, alpha: f64) -> f64 {
    ks_two_sample_critical(n_rep.div_ceil(2), n_rep / 2, alpha)
}

/// Finite thresholds standing in for the asymptotic statements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Condition 1 passes when `|E[X1 X2]|` is within CI half-width plus this.
    pub cond1_tol: f64,
    /// Epsilon at which conditions 2 and 3 are judged.
    pub verdict_eps: f64,
    /// Largest exceedance probability that still passes.
    pub max_prob: f64,
    /// Level of the two-sample KS symmetry tests.
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            cond1_tol: 0.05,
            verdict_eps: 0.1,
            max_prob: 0.01,
            alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub m: usize,
    pub k: usize,
    pub n_rep: usize,
    pub pair_corr: Estimate,
    /// Pair (1, 2) alone, for the exchangeability cross-check.
    pub pair_corr_first: Estimate,
    /// Pair (ceil(m/2), m) alone.
    pub pair_corr_last: Estimate,
    /// `(eps, probability)`, sorted by eps.
    pub max_exceedance: Vec<(f64, f64)>,
    pub quad_lemma: Vec<(f64, f64)>,
    pub quad_theorem: Vec<(f64, f64)>,
    pub marginal_symmetry_ks: Option<f64>,
    pub joint_sign_symmetry_ks: Option<f64>,
    pub symmetry_critical: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionVerdicts {
    pub cond1: bool,
    pub cond2: bool,
    pub cond3_lemma: bool,
    pub cond3_theorem: bool,
    pub exchangeable: bool,
    pub marginal_symmetric: Option<bool>,
    pub jointly_sign_symmetric: Option<bool>,
}

fn lookup(table: &[(f64, f64)], eps: f64) -> Option<f64> {
    table.iter().find(|(e, _)| *e == eps).map(|(_, p)| *p)
}

impl ConditionReport {
    /// Builds the report from replicate-ordered probes. `epsilons` need not
    /// be sorted or unique.
    pub fn from_probes(
        m: usize,
        k: usize,
        probes: &[RowProbe],
        epsilons: &[f64],
        alpha: f64,
    ) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::invalid("n_rep", "no replicates"));
        }
        if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid("epsilons", "every epsilon must be > 0"));
        }
        let mut eps: Vec<f64> = epsilons.to_vec();
        eps.sort_unstable_by(f64::total_cmp);
        eps.dedup();
        let table = |f: &dyn Fn(f64) -> f64| eps.iter().map(|&e| (e, f(e))).collect::<Vec<_>>();
        let pair = |f: fn(&RowProbe) -> f64| {
            let v: Vec<f64> = probes.iter().map(f).collect();
            Estimate::from_values(&v)
        };
        let n = probes.len();
        let (marginal, joint, critical) = if n >= MIN_SYMMETRY_REPS {
            let firsts: Vec<f64> = probes.iter().map(|p| p.first).collect();
            let joint = match probes.iter().map(|p| p.flipped_full_sum).collect::<Option<Vec<_>>>() {
                Some(flips) => {
                    let pairs: Vec<(f64, f64)> =
                        probes.iter().map(|p| p.full_sum).zip(flips).collect();
                    Some(joint_sign_symmetry_ks_from(&pairs)?)
                }
                None => None,
            };
            (
                Some(marginal_symmetry_ks_from(&firsts)?),
                joint,
                Some(symmetry_critical(n, alpha)),
            )
        } else {
            (None, None, None)
        };
        Ok(Self {
            m,
            k,
            n_rep: n,
            pair_corr: pair(|p| p.pair_mean)?,
            pair_corr_first: pair(|p| p.pair_first)?,
            pair_corr_last: pair(|p| p.pair_last)?,
            max_exceedance: table(&|e| max_exceedance(probes, e)),
            quad_lemma: table(&|e| quadratic_concentration(probes, e, QuadVariant::LemmaK)),
            quad_theorem: table(&|e| quadratic_concentration(probes, e, QuadVariant::TheoremM)),
            marginal_symmetry_ks: marginal,
            joint_sign_symmetry_ks: joint,
            symmetry_critical: critical,
        })
    }

    pub fn max_exceedance_at(&self, eps: f64) -> Option<f64> {
        lookup(&self.max_exceedance, eps)
    }

    pub fn quad_at(&self, eps: f64, variant: QuadVariant) -> Option<f64> {
        match variant {
            QuadVariant::LemmaK => lookup(&self.quad_lemma, eps),
            QuadVariant::TheoremM => lookup(&self.quad_theorem, eps),
        }
    }

    /// Judges each condition; `verdict_eps` must be among the report's
    /// epsilons, otherwise conditions 2 and 3 fail.
    pub fn verdicts(&self, t: &Thresholds) -> ConditionVerdicts {
        let pc = &self.pair_corr;
        let cond1 = pc.value.abs() <= pc.ci_half_width.unwrap_or(0.0) + t.cond1_tol;
        let below = |p: Option<f64>| p.is_some_and(|p| p <= t.max_prob);
        let exchangeable = match (self.pair_corr_first.std_err, self.pair_corr_last.std_err) {
            (Some(a), Some(b)) => {
                let pooled = libm::sqrt(a * a + b * b);
                (self.pair_corr_first.value - self.pair_corr_last.value).abs() <= 4.0 * pooled
            }
            _ => true,
        };
        let sym = |d: Option<f64>| match (d, self.symmetry_critical) {
            (Some(d), Some(c)) => Some(d <= c),
            _ => None,
        };
        ConditionVerdicts {
            cond1,
            cond2: below(self.max_exceedance_at(t.verdict_eps)),
            cond3_lemma: below(self.quad_at(t.verdict_eps, QuadVariant::LemmaK)),
            cond3_theorem: below(self.quad_at(t.verdict_eps, QuadVariant::TheoremM)),
            exchangeable,
            marginal_symmetric: sym(self.marginal_symmetry_ks),
            jointly_sign_symmetric: sym(self.joint_sign_symmetry_ks),
        }
    }
}

/// Draws `n_rep` rows of `spec` at size `m` from the check-domain streams
/// and maps each through `f`, in replicate order.
pub fn map_rows<T, F, E>(
    spec: &GeneratorSpec,
    m: usize,
    n_rep: usize,
    seed: u64,
    exec: &E,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync + Send,
    E: Executor + ?Sized,
{
    let sampler = spec.sampler(m)?;
    let results = exec.map_indexed(n_rep, |r| {
        let mut stream = derive_stream_in(Domain::Checks, seed, m, r as u64);
        let mut buf = Vec::with_capacity(m);
        sampler.fill(&mut stream, &mut buf);
        f(&buf)
    });
    results.into_iter().collect()
}

pub fn estimate_pair_correlation<E: Executor + ?Sized>(
    spec: &GeneratorSpec,
    m: usize,
    n_rep: usize,
    seed: u64,
    exec: &E,
) -> Result<Estimate> {
    if m < 2 {
        return Err(Error::invalid("m", "pair correlation needs m >= 2"));
    }
    if n_rep < 2 {
        return Err(Error::invalid("n_rep", "pair correlation needs n_rep >= 2"));
    }
    let v = map_rows(spec, m, n_rep, seed, exec, |row| {
        Ok(row
            .chunks_exact(2)
            .map(|p| p[0] * p[1])
            .sum::<NeumaierSum>()
            .value()
            / (row.len() / 2) as f64)
    })?;
    Estimate::from_values(&v)
}

pub fn estimate_max_exceedance<E: Executor + ?Sized>(
    spec: &GeneratorSpec,
    m: usize,
    eps: f64,
    n_rep: usize,
    seed: u64,
    exec: &E,
) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid("eps", "must be > 0"));
    }
    let sqrt_m = libm::sqrt(m as f64);
    let v = map_rows(spec, m, n_rep, seed, exec, |row| {
        Ok(row.iter().fold(0.0f64, |a, x| a.max(x.abs())) / sqrt_m)
    })?;
    Ok(exceed_fraction(v.into_iter(), eps))
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_quadratic_concentration<E: Executor + ?Sized>(
    spec: &GeneratorSpec,
    m: usize,
    k: usize,
    eps: f64,
    variant: QuadVariant,
    n_rep: usize,
    seed: u64,
    exec: &E,
) -> Result<f64> {
    if k == 0 || k > m {
        return Err(Error::invalid("k", "need 1 <= k <= m"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid("eps", "must be > 0"));
    }
    let divisor = match variant {
        QuadVariant::LemmaK => k,
        QuadVariant::TheoremM => m,
    };
    let v = map_rows(spec, m, n_rep, seed, exec, |row| {
        let ms = row[..divisor]
            .iter()
            .map(|x| x * x)
            .sum::<NeumaierSum>()
            .value()
            / divisor as f64;
        Ok((ms - 1.0).abs())
    })?;
    Ok(exceed_fraction(v.into_iter(), eps))
}

pub fn marginal_symmetry_distance<E: Executor + ?Sized>(
    spec: &GeneratorSpec,
    m: usize,
    n_rep: usize,
    seed: u64,
    exec: &E,
) -> Result<f64> {
    if n_rep < MIN_SYMMETRY_REPS {
        return Err(Error::invalid("n_rep", "symmetry check needs n_rep >= 100"));
    }
    let firsts = map_rows(spec, m, n_rep, seed, exec, |row| Ok(row[0]))?;
    marginal_symmetry_ks_from(&firsts)
}

pub fn joint_sign_symmetry_distance<E: Executor + ?Sized>(
    spec: &GeneratorSpec,
    m: usize,
    n_rep: usize,
    seed: u64,
    exec: &E,
) -> Result<f64> {
    if !m.is_multiple_of(2) {
        return Err(Error::invalid("m", "joint sign symmetry needs even m"));
    }
    if n_rep < MIN_SYMMETRY_REPS {
        return Err(Error::invalid("n_rep", "symmetry check needs n_rep >= 100"));
    }
    let pairs = map_rows(spec, m, n_rep, seed, exec, |row| {
        let p = RowProbe::of(row, 1)?;
        Ok((p.full_sum, p.flipped_full_sum.expect("even m")))
    })?;
    joint_sign_symmetry_ks_from(&pairs)
}

/// Condition report for `spec` at size `m` from check-domain rows. Odd `m`
/// is truncated to even length first; `k` follows `gamma` on the truncated
/// length.
#[allow(clippy::too_many_arguments)]
pub fn condition_report<E: Executor + ?Sized>(
    spec: &GeneratorSpec,
    m: usize,
    gamma: f64,
    n_rep: usize,
    seed: u64,
    epsilons: &[f64],
    alpha: f64,
    exec: &E,
) -> Result<ConditionReport> {
    let m_eff = m - m % 2;
    let k = k_from_gamma(gamma, m_eff);
    let probes = map_rows(spec, m, n_rep, seed, exec, |row| {
        RowProbe::of(even_prefix(row)?, k)
    })?;
    ConditionReport::from_probes(m, k, &probes, epsilons, alpha)
}
