//! Normal target laws and distances from an empirical sample to them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::statistics::StatisticKind;
use crate::sum::NeumaierSum;

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, `0.5 * erfc(-z / sqrt(2))`. The complementary error
/// function keeps full relative precision in the lower tail.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * libm::exp(-0.5 * z * z)
}

fn check_sigma2(sigma2: f64) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::invalid("sigma2", "variance must be finite and > 0"));
    }
    Ok(libm::sqrt(sigma2))
}

/// CDF of N(0, sigma2) at `x`.
pub fn normal_cdf(x: f64, sigma2: f64) -> Result<f64> {
    let sd = check_sigma2(sigma2)?;
    Ok(std_normal_cdf(x / sd))
}

/// Standard normal quantile by safeguarded Newton iteration on
/// `ln Phi(x) = ln p` (lower half; the upper half uses `Q(p) = -Q(1 - p)`,
/// where `1 - p` is exact for `p >= 0.5`).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", "probability must lie in (0, 1)"));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    let target = libm::log(p);
    // Phi(-40) underflows far below the smallest positive p.
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    let mut x = 0.0f64;
    for _ in 0..200 {
        let cdf = std_normal_cdf(x);
        let g = libm::log(cdf) - target;
        if g == 0.0 {
            return x;
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = std_normal_pdf(x) / cdf;
        let mut next = x - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// Quantile of N(0, sigma2).
pub fn normal_quantile(p: f64, sigma2: f64) -> Result<f64> {
    let sd = check_sigma2(sigma2)?;
    Ok(sd * std_normal_quantile(p)?)
}

/// Monte Carlo sample of a scalar statistic at one row size.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticSample {
    pub kind: StatisticKind,
    pub m: usize,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl StatisticSample {
    pub fn new(kind: StatisticKind, m: usize, values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample", "empty sample"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("sample", "non-finite value"));
        }
        Ok(Self {
            kind,
            m,
            values,
            seed,
        })
    }

    pub fn n_rep(&self) -> usize {
        self.values.len()
    }

    pub fn target_sigma2(&self) -> f64 {
        self.kind.target_sigma2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofReport {
    pub ks: f64,
    pub wasserstein1: f64,
    pub sample_mean: f64,
    /// Unbiased variance; `None` for a single-value sample.
    pub sample_var: Option<f64>,
    pub target_sigma2: f64,
}

fn sorted_copy(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("sample", "empty sample"));
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov distance to N(0, sigma2).
pub fn ks_normal(values: &[f64], sigma2: f64) -> Result<f64> {
    let sd = check_sigma2(sigma2)?;
    let sorted = sorted_copy(values)?;
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = std_normal_cdf(x / sd);
            let above = ((i + 1) as f64 / n - f).abs();
            let below = (i as f64 / n - f).abs();
            above.max(below)
        })
        .fold(0.0, f64::max))
}

pub fn ks_statistic(sample: &StatisticSample) -> Result<f64> {
    ks_normal(&sample.values, sample.target_sigma2())
}

/// Two-sample Kolmogorov-Smirnov distance; ties are stepped together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_copy(a)?;
    let b = sorted_copy(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS critical value at level `alpha`:
/// `sqrt(-ln(alpha / 2) / 2) * sqrt((n1 + n2) / (n1 * n2))`.
pub fn ks_two_sample_critical(n1: usize, n2: usize, alpha: f64) -> f64 {
    let c = libm::sqrt(-libm::log(alpha / 2.0) / 2.0);
    let (n1, n2) = (n1 as f64, n2 as f64);
    c * libm::sqrt((n1 + n2) / (n1 * n2))
}

/// `int_l^h |a - z| phi(z) dz` for `l <= h`, in closed form.
fn abs_dev_mass(a: f64, l: f64, h: f64) -> f64 {
    let (pl, ph) = (std_normal_pdf(l), std_normal_pdf(h));
    let (cl, ch) = (std_normal_cdf(l), std_normal_cdf(h));
    if a <= l {
        (pl - ph) - a * (ch - cl)
    } else if a >= h {
        a * (ch - cl) - (pl - ph)
    } else {
        abs_dev_mass(a, l, a) + abs_dev_mass(a, a, h)
    }
}

/// Exact Wasserstein-1 distance between the empirical law of `values` and
/// N(0, sigma2): `sum_i int_{(i-1)/n}^{i/n} |x_(i) - Q(u)| du`.
pub fn wasserstein1_normal(values: &[f64], sigma2: f64) -> Result<f64> {
    let sd = check_sigma2(sigma2)?;
    let sorted = sorted_copy(values)?;
    let n = sorted.len();
    let mut acc = NeumaierSum::new();
    let mut lower = f64::NEG_INFINITY;
    for (i, &x) in sorted.iter().enumerate() {
        let upper = if i + 1 == n {
            f64::INFINITY
        } else {
            std_normal_quantile((i + 1) as f64 / n as f64)?
        };
        acc.add(abs_dev_mass(x / sd, lower, upper));
        lower = upper;
    }
    Ok(sd * acc.value())
}

pub fn wasserstein1(sample: &StatisticSample) -> Result<f64> {
    wasserstein1_normal(&sample.values, sample.target_sigma2())
}

pub fn sample_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("sample", "empty sample"));
    }
    Ok(crate::sum::sum(values) / values.len() as f64)
}

/// Unbiased (n - 1) variance, two-pass with compensated sums.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::invalid("sample", "variance needs at least 2 values"));
    }
    let mean = sample_mean(values)?;
    let ss = values
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<NeumaierSum>()
        .value();
    Ok(ss / (values.len() - 1) as f64)
}

/// `(mean, unbiased variance)`.
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    Ok((sample_mean(values)?, sample_variance(values)?))
}

pub fn gof_report(sample: &StatisticSample) -> Result<GofReport> {
    Ok(GofReport {
        ks: ks_statistic(sample)?,
        wasserstein1: wasserstein1(sample)?,
        sample_mean: sample_mean(&sample.values)?,
        sample_var: sample_variance(&sample.values).ok(),
        target_sigma2: sample.target_sigma2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn quantile_grid(n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| std_normal_quantile((i as f64 - 0.5) / n as f64).unwrap())
            .collect()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(normal_cdf(0.0, 1.0).unwrap(), 0.5);
        assert!((normal_cdf(1.96, 1.0).unwrap() - 0.975_002_1).abs() < 1e-6);
        assert_eq!(normal_cdf(2.0, 4.0).unwrap(), normal_cdf(1.0, 1.0).unwrap());
        assert!(normal_cdf(0.0, 0.0).is_err());
        assert!(normal_cdf(0.0, -1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-12, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.975, 1.0 - 1e-9] {
            let x = std_normal_quantile(p).unwrap();
            let back = std_normal_cdf(x);
            assert!((back - p).abs() <= 1e-13 * p.min(1.0 - p).max(1e-3), "p={p} x={x}");
        }
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_known_values() {
        assert!((std_normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.975, 4.0).unwrap() - 2.0 * 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_normal(&[0.0], 1.0).unwrap(), 0.5);
        assert!((ks_normal(&[-1.0, 1.0], 1.0).unwrap() - 0.3413).abs() < 1e-4);
        assert!(ks_normal(&quantile_grid(100), 1.0).unwrap() <= 0.005 + 1e-12);
        assert!(ks_normal(&[], 1.0).is_err());
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0; 5], &[1.0; 3]).unwrap(), 1.0);
        assert_eq!(ks_two_sample(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), 0.5);
        let crit = ks_two_sample_critical(100, 100, 0.01);
        assert!((crit - 1.627_623_630_718_729 * libm::sqrt(0.02)).abs() < 1e-6);
    }

    #[test]
    fn wasserstein_examples() {
        let w = wasserstein1_normal(&[0.0], 1.0).unwrap();
        assert!((w - libm::sqrt(2.0 / core::f64::consts::PI)).abs() < 1e-3);
        assert!(wasserstein1_normal(&quantile_grid(1000), 1.0).unwrap() <= 0.01);
        assert!(wasserstein1_normal(&[], 1.0).is_err());
    }

    #[test]
    fn wasserstein_scales_linearly() {
        let grid = quantile_grid(200);
        let half: Vec<f64> = grid.iter().map(|x| 0.5 * x).collect();
        let w1 = wasserstein1_normal(&grid, 1.0).unwrap();
        let wq = wasserstein1_normal(&half, 0.25).unwrap();
        assert!((wq - 0.5 * w1).abs() < 1e-15);
        let shifted: Vec<f64> = grid.iter().map(|x| x + 1.0).collect();
        let ws = wasserstein1_normal(&shifted, 1.0).unwrap();
        assert!((ws - 1.0).abs() < 0.01, "{ws}");
    }

    #[test]
    fn summarize_examples() {
        assert_eq!(summarize(&[1.0, 1.0, 1.0]).unwrap(), (1.0, 0.0));
        assert_eq!(summarize(&[-1.0, 1.0]).unwrap(), (0.0, 2.0));
        assert_eq!(summarize(&[0.0, 0.0, 3.0]).unwrap(), (1.0, 3.0));
        assert!(summarize(&[1.0]).is_err());
        assert_eq!(sample_mean(&[4.0]).unwrap(), 4.0);
    }

    #[test]
    fn report_for_single_value() {
        let s = StatisticSample::new(StatisticKind::FullSum, 10, vec![0.0], 1).unwrap();
        let r = gof_report(&s).unwrap();
        assert_eq!(r.ks, 0.5);
        assert_eq!(r.sample_var, None);
        assert!(StatisticSample::new(StatisticKind::FullSum, 10, vec![], 1).is_err());
        assert!(StatisticSample::new(StatisticKind::FullSum, 10, vec![f64::NAN], 1).is_err());
    }

    proptest! {
        #[test]
        fn cdf_monotone_and_symmetric(a in -9.0f64..9.0, b in -9.0f64..9.0, s2 in 0.01f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(normal_cdf(lo, s2).unwrap() <= normal_cdf(hi, s2).unwrap());
            let sum = normal_cdf(a, s2).unwrap() + normal_cdf(-a, s2).unwrap();
            prop_assert!((sum - 1.0).abs() <= 2e-10);
        }

        #[test]
        fn ks_permutation_invariant(mut v in prop::collection::vec(-5.0f64..5.0, 1..60), seed in any::<u64>()) {
            let before = ks_normal(&v, 1.0).unwrap();
            let n = v.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = crate::stream::mix64(s);
                v.swap(i, (s % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(before, ks_normal(&v, 1.0).unwrap());
            prop_assert!((0.0..=1.0).contains(&before));
        }

        #[test]
        fn wasserstein_nonnegative(v in prop::collection::vec(-5.0f64..5.0, 1..40), s2 in 0.1f64..4.0) {
            prop_assert!(wasserstein1_normal(&v, s2).unwrap() >= 0.0);
        }
    }
}
