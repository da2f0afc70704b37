//! Row statistics and the sign-flip construction relating them.
//!
//! With `Y = sign_flip_tail(X, m/2)` the centered partial-sum statistic of
//! `Y` at `k = m/2` equals `sqrt(m/2) * (1/m) * sum(X)`, i.e. the full-sum
//! statistic of `X` scaled by `1/sqrt(2)`. [`proof_identity_residual`]
//! measures how far floating point strays from that identity.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::generators::ArrayRow;
use crate::sum;

/// Row-size schedule `m_1 < m_2 < ...` with partial-sum sizes
/// `k(m) = max(1, floor(gamma * m))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    m_values: Vec<usize>,
    gamma: f64,
}

impl ScheduleSpec {
    pub fn new(m_values: Vec<usize>, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1)"));
        }
        if m_values.is_empty() {
            return Err(Error::invalid("m", "schedule is empty"));
        }
        if m_values.iter().any(|&m| m < 2) {
            return Err(Error::invalid("m", "every row size must be >= 2"));
        }
        if m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("m", "schedule must be strictly increasing"));
        }
        Ok(Self { m_values, gamma })
    }

    pub fn m_values(&self) -> &[usize] {
        &self.m_values
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self, m: usize) -> usize {
        k_from_gamma(self.gamma, m)
    }
}

/// `max(1, floor(gamma * m))`.
pub fn k_from_gamma(gamma: f64, m: usize) -> usize {
    let k = libm::floor(gamma * m as f64) as usize;
    k.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatisticKind {
    /// `(1/sqrt(m)) * sum(X)`, limit N(0, 1).
    FullSum,
    /// `sqrt(k) * (mean of first k - mean of all m)`, limit N(0, 1 - gamma).
    Weber { gamma: f64 },
}

impl StatisticKind {
    pub fn weber(gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1)"));
        }
        Ok(StatisticKind::Weber { gamma })
    }

    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::FullSum => "full_sum",
            StatisticKind::Weber { .. } => "weber",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            StatisticKind::FullSum => None,
            StatisticKind::Weber { gamma } => Some(*gamma),
        }
    }

    pub fn target_sigma2(&self) -> f64 {
        match self {
            StatisticKind::FullSum => 1.0,
            StatisticKind::Weber { gamma } => 1.0 - gamma,
        }
    }

    /// Evaluates on `values`; `k` is only used by the weber statistic.
    pub fn evaluate(&self, values: &[f64], k: usize) -> Result<f64> {
        match self {
            StatisticKind::FullSum => Ok(full_sum_statistic(values)),
            StatisticKind::Weber { .. } => weber_statistic(values, k),
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses the kind name; `weber` gets `gamma = 0` until a gamma is supplied.
impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_sum" => Ok(StatisticKind::FullSum),
            "weber" => Ok(StatisticKind::Weber { gamma: 0.0 }),
            _ => Err(Error::invalid(
                "statistic",
                alloc::format!("unknown statistic `{s}`"),
            )),
        }
    }
}

/// Negates every entry after position `k` (1-based), in place.
pub fn flip_tail_in_place(values: &mut [f64], k: usize) -> Result<()> {
    if k == 0 || k > values.len() {
        return Err(Error::invalid(
            "k",
            alloc::format!("need 1 <= k <= {}, got {k}", values.len()),
        ));
    }
    for v in &mut values[k..] {
        *v = -*v;
    }
    Ok(())
}

/// `Y_i = X_i` for `i <= k`, `-X_i` for `i > k`.
pub fn sign_flip_tail(row: &ArrayRow, k: usize) -> Result<ArrayRow> {
    let mut values = row.values().to_vec();
    flip_tail_in_place(&mut values, k)?;
    Ok(row.with_values(values))
}

pub fn full_sum_statistic(values: &[f64]) -> f64 {
    sum::sum(values) / libm::sqrt(values.len() as f64)
}

pub fn weber_statistic(values: &[f64], k: usize) -> Result<f64> {
    let m = values.len();
    if k == 0 || k >= m {
        return Err(Error::invalid(
            "k",
            alloc::format!("need 1 <= k < m = {m}, got {k}"),
        ));
    }
    let head = sum::sum(&values[..k]) / k as f64;
    let all = sum::sum(values) / m as f64;
    Ok(libm::sqrt(k as f64) * (head - all))
}

/// `|(2/m) sum_{i<=m/2} Y_i - (1/m) sum Y_i - (1/m) sum X_i|` with
/// `Y = sign_flip_tail(X, m/2)`. Zero in exact arithmetic.
pub fn proof_identity_residual(values: &[f64]) -> Result<f64> {
    let m = values.len();
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::invalid(
            "m",
            alloc::format!("proof identity needs even m >= 2, got {m}"),
        ));
    }
    let half = m / 2;
    let mut flipped = values.to_vec();
    flip_tail_in_place(&mut flipped, half)?;
    let mf = m as f64;
    let lhs = 2.0 / mf * sum::sum(&flipped[..half]) - sum::sum(&flipped) / mf;
    let rhs = sum::sum(values) / mf;
    Ok((lhs - rhs).abs())
}

/// Even-length prefix: drops the last entry when m is odd.
pub fn even_prefix(values: &[f64]) -> Result<&[f64]> {
    let m = values.len();
    if m < 2 {
        return Err(Error::invalid("m", alloc::format!("need m >= 2, got {m}")));
    }
    Ok(&values[..m - m % 2])
}

pub fn truncate_to_even(row: &ArrayRow) -> Result<ArrayRow> {
    Ok(row.with_values(even_prefix(row.values())?.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn row(v: &[f64]) -> ArrayRow {
        ArrayRow::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn sign_flip_examples() {
        let r = row(&[1.0, 2.0, -3.0, 4.0]);
        assert_eq!(sign_flip_tail(&r, 2).unwrap().values(), &[1.0, 2.0, 3.0, -4.0]);
        assert_eq!(sign_flip_tail(&r, 4).unwrap().values(), r.values());
        let z = row(&[0.0; 5]);
        assert!(sign_flip_tail(&z, 3).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sign_flip_rejects_bad_k() {
        let r = row(&[1.0, 2.0]);
        assert!(sign_flip_tail(&r, 0).is_err());
        assert!(sign_flip_tail(&r, 3).is_err());
    }

    #[test]
    fn full_sum_examples() {
        assert_eq!(full_sum_statistic(&[1.0; 4]), 2.0);
        assert_eq!(full_sum_statistic(&[3.0, -3.0]), 0.0);
    }

    #[test]
    fn weber_examples() {
        assert_eq!(weber_statistic(&[2.0, 0.0, 0.0, 0.0], 1).unwrap(), 1.5);
        assert_eq!(weber_statistic(&[0.7; 9], 4).unwrap(), 0.0);
        assert_eq!(weber_statistic(&[1.0, -1.0, 2.0, -2.0], 2).unwrap(), 0.0);
    }

    #[test]
    fn weber_rejects_degenerate_k() {
        assert!(weber_statistic(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(weber_statistic(&[1.0, 2.0, 3.0], 0).is_err());
    }

    #[test]
    fn identity_examples() {
        assert_eq!(proof_identity_residual(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(proof_identity_residual(&[0.0; 6]).unwrap(), 0.0);
        assert!(proof_identity_residual(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_to_even(&row(&[1.0, 2.0, 3.0])).unwrap().values(), &[1.0, 2.0]);
        assert_eq!(
            truncate_to_even(&row(&[1.0, 2.0, 3.0, 4.0])).unwrap().values(),
            &[1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(truncate_to_even(&row(&[5.0, 7.0])).unwrap().values(), &[5.0, 7.0]);
        assert!(truncate_to_even(&row(&[5.0])).is_err());
    }

    #[test]
    fn schedule_k_rule() {
        let s = ScheduleSpec::new(vec![2, 3, 10, 101], 0.5).unwrap();
        assert_eq!(s.k(2), 1);
        assert_eq!(s.k(3), 1);
        assert_eq!(s.k(10), 5);
        assert_eq!(s.k(101), 50);
        let zero = ScheduleSpec::new(vec![10], 0.0).unwrap();
        assert_eq!(zero.k(10), 1);
        for &m in s.m_values() {
            let k = s.k(m);
            assert!(k >= 1 && k < m);
            assert!((k as f64 / m as f64 - 0.5).abs() <= 1.0 / m as f64);
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(ScheduleSpec::new(vec![], 0.5).is_err());
        assert!(ScheduleSpec::new(vec![10, 10], 0.5).is_err());
        assert!(ScheduleSpec::new(vec![1, 10], 0.5).is_err());
        assert!(ScheduleSpec::new(vec![10], 1.0).is_err());
        assert!(ScheduleSpec::new(vec![10], -0.1).is_err());
    }

    #[test]
    fn statistic_kind_targets() {
        assert_eq!(StatisticKind::FullSum.target_sigma2(), 1.0);
        assert_eq!(StatisticKind::weber(0.5).unwrap().target_sigma2(), 0.5);
        assert!(StatisticKind::weber(1.0).is_err());
        assert_eq!("weber".parse::<StatisticKind>().unwrap().name(), "weber");
        assert!("mean".parse::<StatisticKind>().is_err());
    }

    fn finite_row() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 1..200)
    }

    fn even_row() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 1..100).prop_map(|mut v| {
            let w = v.clone();
            v.extend(w.iter().rev().map(|x| x * 0.5 - 1.0));
            v
        })
    }

    proptest! {
        #[test]
        fn flip_is_involution(v in finite_row(), k_frac in 0.0f64..1.0) {
            let r = row(&v);
            let k = 1 + ((v.len() - 1) as f64 * k_frac) as usize;
            let twice = sign_flip_tail(&sign_flip_tail(&r, k).unwrap(), k).unwrap();
            prop_assert_eq!(twice.values(), r.values());
        }

        #[test]
        fn identity_residual_is_rounding_only(v in even_row()) {
            let m = v.len() as f64;
            let scale = 1.0 + v.iter().map(|x| x.abs()).sum::<f64>() / m;
            prop_assert!(proof_identity_residual(&v).unwrap() <= 1e-12 * scale);
        }

        #[test]
        fn full_sum_of_negated_row_is_negated(v in finite_row()) {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            prop_assert_eq!(full_sum_statistic(&neg), -full_sum_statistic(&v));
            let r = row(&v);
            let id = sign_flip_tail(&r, r.m()).unwrap();
            prop_assert_eq!(full_sum_statistic(&id), full_sum_statistic(&v));
        }

        #[test]
        fn weber_on_flipped_half_is_scaled_full_sum(v in even_row()) {
            let m = v.len();
            let r = row(&v);
            let y = sign_flip_tail(&r, m / 2).unwrap();
            let lhs = weber_statistic(&y, m / 2).unwrap();
            let rhs = libm::sqrt(m as f64 / 2.0) * sum::sum(&v) / m as f64;
            let scale = 1.0 + v.iter().map(|x| x.abs()).sum::<f64>() / libm::sqrt(m as f64);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
        }
    }
}
