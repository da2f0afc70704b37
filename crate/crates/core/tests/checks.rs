use exchlab_core::checks::*;
use exchlab_core::generators::*;
use exchlab_core::gof::ks_two_sample_critical;
use exchlab_core::stream::derive_stream;
use exchlab_core::Sequential;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

const NORMAL: GeneratorSpec = GeneratorSpec::IidSymmetric { law: SymmetricLaw::StdNormal };
const RADEMACHER: GeneratorSpec = GeneratorSpec::IidSymmetric { law: SymmetricLaw::Rademacher };

/// First coordinates of iid normal rows with the sign stripped.
fn abs_normal_firsts(n: usize) -> Vec<f64> {
    (0..n as u64)
        .map(|r| {
            gen_iid_symmetric(SymmetricLaw::StdNormal, 1, &mut derive_stream(31, 1, r)).unwrap()[0]
                .abs()
        })
        .collect()
}

#[test]
fn pair_correlation_iid_covers_zero() {
    let est = estimate_pair_correlation(&NORMAL, 20, 5000, 1, &Sequential).unwrap();
    assert!(est.covers(0.0), "{est:?}");
    assert!(estimate_pair_correlation(&NORMAL, 20, 1, 1, &Sequential).is_err());
    assert!(estimate_pair_correlation(&NORMAL, 1, 10, 1, &Sequential).is_err());
}

#[test]
fn pair_correlation_equicorrelated_covers_rho() {
    let spec = GeneratorSpec::EquicorrelatedGaussian { rho: RhoRule::Const(0.3) };
    let est = estimate_pair_correlation(&spec, 8, 20_000, 2, &Sequential).unwrap();
    assert!(est.covers(0.3), "{est:?}");
}

#[test]
fn rademacher_max_exceedance_is_an_indicator() {
    for &m in &[4usize, 100, 400, 2500] {
        for &eps in &[0.01, 0.05, 0.1, 0.5, 0.6] {
            let p = estimate_max_exceedance(&RADEMACHER, m, eps, 50, 3, &Sequential).unwrap();
            let expected = if 1.0 / (m as f64).sqrt() > eps { 1.0 } else { 0.0 };
            assert_eq!(p, expected, "m={m} eps={eps}");
        }
    }
    assert!(estimate_max_exceedance(&RADEMACHER, 4, 0.0, 10, 3, &Sequential).is_err());
}

#[test]
fn normal_max_exceedance_matches_tail_bound() {
    let z = Normal::new(0.0, 1.0).unwrap();
    let tail = 2.0 * (1.0 - z.cdf(5.0));
    let oracle = 1.0 - (1.0 - tail).powi(100);
    assert!((oracle - 6e-5).abs() < 5e-6);
    let p = estimate_max_exceedance(&NORMAL, 100, 0.5, 10_000, 4, &Sequential).unwrap();
    assert!(p <= 1e-3, "{p}");
}

#[test]
fn bounded_zero_sum_never_exceeds() {
    let spec = GeneratorSpec::ZeroSumPermutation {
        magnitudes: MagnitudeRule::TwoPoint { low: 1.0, high: 2.0, p_high: 0.5, seed: 1 },
    };
    let p = estimate_max_exceedance(&spec, 400, 1.0, 1000, 5, &Sequential).unwrap();
    assert_eq!(p, 0.0);
}

#[test]
fn quadratic_concentration_permutation_families_exact() {
    let specs = [
        GeneratorSpec::RademacherMagnitude { magnitudes: MagnitudeRule::AbsNormal { seed: 2 } },
        GeneratorSpec::ZeroSumPermutation { magnitudes: MagnitudeRule::AbsNormal { seed: 2 } },
    ];
    for spec in &specs {
        for &eps in &[1e-9, 0.05, 0.5] {
            let p = estimate_quadratic_concentration(
                spec,
                200,
                100,
                eps,
                QuadVariant::TheoremM,
                500,
                6,
                &Sequential,
            )
            .unwrap();
            assert_eq!(p, 0.0, "{:?} eps={eps}", spec.family());
        }
    }
    assert!(estimate_quadratic_concentration(
        &NORMAL,
        10,
        11,
        0.1,
        QuadVariant::LemmaK,
        10,
        1,
        &Sequential
    )
    .is_err());
}

#[test]
fn quadratic_concentration_normal_matches_chi_square() {
    // P(|chi2_100 / 100 - 1| > 0.1) from the chi-square law.
    let chi = ChiSquared::new(100.0).unwrap();
    let oracle = chi.cdf(90.0) + (1.0 - chi.cdf(110.0));
    assert!((oracle - 0.48).abs() < 0.002);
    let p = estimate_quadratic_concentration(
        &NORMAL,
        100,
        50,
        0.1,
        QuadVariant::TheoremM,
        40_000,
        7,
        &Sequential,
    )
    .unwrap();
    assert!((p - oracle).abs() < 0.02, "{p} vs {oracle}");
    // Lemma variant with k = 50: chi2_50 / 50.
    let chi50 = ChiSquared::new(50.0).unwrap();
    let oracle50 = chi50.cdf(45.0) + (1.0 - chi50.cdf(55.0));
    let p50 = estimate_quadratic_concentration(
        &NORMAL,
        100,
        50,
        0.1,
        QuadVariant::LemmaK,
        40_000,
        7,
        &Sequential,
    )
    .unwrap();
    assert!((p50 - oracle50).abs() < 0.02, "{p50} vs {oracle50}");
}

#[test]
fn marginal_symmetry_detects_one_sided_support() {
    let n = 4000;
    let crit = ks_two_sample_critical(n / 2, n / 2, 0.01);
    let firsts = abs_normal_firsts(n);
    let d = marginal_symmetry_ks_from(&firsts).unwrap();
    // |Z| against -|Z|: the supports are disjoint, so the distance is 1.
    assert_eq!(d, 1.0);
    assert!(d > crit);
    assert!(marginal_symmetry_ks_from(&firsts[..50]).is_err());

    let rad = GeneratorSpec::RademacherMagnitude { magnitudes: MagnitudeRule::AbsNormal { seed: 4 } };
    assert!(marginal_symmetry_distance(&rad, 10, n, 8, &Sequential).unwrap() <= crit);
    assert!(marginal_symmetry_distance(&NORMAL, 10, n, 8, &Sequential).unwrap() <= crit);
}

#[test]
fn joint_sign_symmetry_separates_families() {
    let n = 4000;
    let crit = ks_two_sample_critical(n / 2, n / 2, 0.01);
    let rad = GeneratorSpec::RademacherMagnitude { magnitudes: MagnitudeRule::AbsNormal { seed: 4 } };
    assert!(joint_sign_symmetry_distance(&rad, 100, n, 9, &Sequential).unwrap() <= crit);
    assert!(joint_sign_symmetry_distance(&NORMAL, 100, n, 9, &Sequential).unwrap() <= crit);
    let zs = GeneratorSpec::ZeroSumPermutation { magnitudes: MagnitudeRule::AbsNormal { seed: 4 } };
    let d = joint_sign_symmetry_distance(&zs, 100, n, 9, &Sequential).unwrap();
    // A point mass at 0 against a diffuse symmetric law: about 1/2.
    assert!(d > 0.4 && d > crit, "{d}");
    assert!(joint_sign_symmetry_distance(&zs, 101, n, 9, &Sequential).is_err());
    assert!(joint_sign_symmetry_distance(&zs, 100, 99, 9, &Sequential).is_err());
}

#[test]
fn probe_fields() {
    let row = [1.0, -2.0, 3.0, 4.0, -1.0, 0.5];
    let p = RowProbe::of(&row, 2).unwrap();
    assert_eq!(p.pair_first, -2.0);
    assert_eq!(p.pair_last, 3.0 * 0.5);
    assert!((p.pair_mean - (-2.0 + 12.0 - 0.5) / 3.0).abs() < 1e-15);
    assert!((p.max_abs_scaled - 4.0 / 6f64.sqrt()).abs() < 1e-15);
    assert_eq!(p.mean_sq_k, 2.5);
    assert!((p.mean_sq_m - 31.25 / 6.0).abs() < 1e-15);
    assert!((p.full_sum - 5.5 / 6f64.sqrt()).abs() < 1e-15);
    assert!((p.flipped_full_sum.unwrap() - (2.0 - 3.5) / 6f64.sqrt()).abs() < 1e-15);
    assert_eq!(RowProbe::of(&row[..5], 2).unwrap().flipped_full_sum, None);
    assert!(RowProbe::of(&row, 7).is_err());
}

#[test]
fn report_probabilities_and_ci() {
    let spec = GeneratorSpec::ScaleMixture { delta: DeltaRule::Const(0.5) };
    let r = condition_report(&spec, 64, 0.5, 2000, 11, &[0.5, 0.05, 0.1, 0.1], 0.01, &Sequential)
        .unwrap();
    assert_eq!(r.k, 32);
    assert_eq!(r.max_exceedance.len(), 3);
    for (_, p) in r.max_exceedance.iter().chain(&r.quad_lemma).chain(&r.quad_theorem) {
        assert!((0.0..=1.0).contains(p));
    }
    assert!(r.pair_corr.ci_half_width.unwrap() > 0.0);
    let v = r.verdicts(&Thresholds::default());
    assert!(v.cond1 && v.exchangeable);
    // sigma^2 uniform on [0.25, 2.25]: the mean square stays spread out.
    assert!(!v.cond3_theorem);
    assert_eq!(v.marginal_symmetric, Some(true));
    assert_eq!(v.jointly_sign_symmetric, Some(true));
}

#[test]
fn exchangeability_cross_check_flags_ordered_rows() {
    // Sorting a row breaks exchangeability: X1*X2 > 0 mostly, the middle
    // pair behaves differently.
    let probes: Vec<RowProbe> = (0..2000u64)
        .map(|r| {
            let mut row = gen_iid_symmetric(SymmetricLaw::StdNormal, 10, &mut derive_stream(3, 10, r))
                .unwrap()
                .into_values();
            row.sort_by(f64::total_cmp);
            RowProbe::of(&row, 5).unwrap()
        })
        .collect();
    let r = ConditionReport::from_probes(10, 5, &probes, &[0.1], 0.01).unwrap();
    assert!(!r.verdicts(&Thresholds::default()).exchangeable);
}

#[test]
fn small_replicate_counts_skip_symmetry() {
    let r = condition_report(&NORMAL, 10, 0.5, 20, 1, &[0.1], 0.01, &Sequential).unwrap();
    assert_eq!(r.marginal_symmetry_ks, None);
    assert_eq!(r.verdicts(&Thresholds::default()).marginal_symmetric, None);
}

#[test]
fn estimators_are_deterministic() {
    let spec = GeneratorSpec::EquicorrelatedGaussian { rho: RhoRule::OverM { c: 3.0 } };
    let a = condition_report(&spec, 50, 0.5, 500, 5, &[0.1], 0.01, &Sequential).unwrap();
    let b = condition_report(&spec, 50, 0.5, 500, 5, &[0.1], 0.01, &Sequential).unwrap();
    assert_eq!(a, b);
}
