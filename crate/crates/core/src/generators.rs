//! Exchangeable row families.
//!
//! Five families span {extendable, non-extendable} x {jointly sign-symmetric,
//! marginally symmetric only}, and two of them carry an m-dependent parameter
//! (`rho`, `delta`) so that one experiment can sweep m while a hypothesis
//! holds only in the limit.
//!
//! | family                    | joint sign sym. | extendable | note                         |
//! |---------------------------|-----------------|------------|------------------------------|
//! | `iid_symmetric`           | yes             | yes        | baseline                     |
//! | `rademacher_magnitude`    | yes             | no         | signs x permuted magnitudes  |
//! | `zero_sum_permutation`    | no              | no         | permuted `+c, -c` pairs      |
//! | `equicorrelated_gaussian` | only if rho = 0 | yes        | pairwise correlation `rho`   |
//! | `scale_mixture`           | yes             | yes        | one random scale per row     |

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;
use core::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::stream::{derive_stream_in, Domain, SeedInfo, Stream};
use crate::sum;

/// Tolerance on the mean square of magnitudes accepted as normalized.
pub const NORMALIZED_TOL: f64 = 1e-9;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    IidSymmetric,
    RademacherMagnitude,
    ZeroSumPermutation,
    EquicorrelatedGaussian,
    ScaleMixture,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::IidSymmetric,
        Family::RademacherMagnitude,
        Family::ZeroSumPermutation,
        Family::EquicorrelatedGaussian,
        Family::ScaleMixture,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::IidSymmetric => "iid_symmetric",
            Family::RademacherMagnitude => "rademacher_magnitude",
            Family::ZeroSumPermutation => "zero_sum_permutation",
            Family::EquicorrelatedGaussian => "equicorrelated_gaussian",
            Family::ScaleMixture => "scale_mixture",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.id() == s)
            .ok_or_else(|| Error::invalid("family", alloc::format!("unknown family `{s}`")))
    }
}

/// Zero-mean, unit-variance symmetric laws for the i.i.d. family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetricLaw {
    StdNormal,
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    UniformSym,
}

impl SymmetricLaw {
    pub fn id(self) -> &'static str {
        match self {
            SymmetricLaw::StdNormal => "std_normal",
            SymmetricLaw::Rademacher => "rademacher",
            SymmetricLaw::UniformSym => "uniform_sym",
        }
    }
}

impl FromStr for SymmetricLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std_normal" => Ok(SymmetricLaw::StdNormal),
            "rademacher" => Ok(SymmetricLaw::Rademacher),
            "uniform_sym" => Ok(SymmetricLaw::UniformSym),
            _ => Err(Error::invalid(
                "dist",
                alloc::format!("unknown distribution `{s}`"),
            )),
        }
    }
}

/// How the fixed magnitudes of a permutation family are produced at row
/// size m. Draws are keyed by `(seed, m)` only, so every replicate of a cell
/// permutes the same multiset.
#[derive(Debug, Clone, PartialEq)]
pub enum MagnitudeRule {
    /// All magnitudes equal to one.
    Unit,
    /// `|Z|` draws, Z standard normal.
    AbsNormal { seed: u64 },
    /// `high` with probability `p_high`, else `low`.
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
        seed: u64,
    },
    /// Literal values; only valid for the one row size they fit.
    Explicit(Vec<f64>),
}

impl MagnitudeRule {
    fn validate(&self) -> Result<()> {
        match self {
            MagnitudeRule::Unit | MagnitudeRule::AbsNormal { .. } => Ok(()),
            MagnitudeRule::TwoPoint {
                low, high, p_high, ..
            } => {
                if !(low.is_finite() && *low > 0.0 && high.is_finite() && *high > 0.0) {
                    return Err(Error::invalid(
                        "magnitudes",
                        "two_point values must be finite and > 0",
                    ));
                }
                if !(0.0..=1.0).contains(p_high) {
                    return Err(Error::invalid("magnitudes", "p_high must lie in [0, 1]"));
                }
                Ok(())
            }
            MagnitudeRule::Explicit(v) => {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(Error::invalid(
                        "magnitudes",
                        "explicit magnitudes must be nonempty, finite and > 0",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Raw (unnormalized) magnitudes, `count` of them, for row size `m`.
    pub fn draw(&self, count: usize, m: usize) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            MagnitudeRule::Unit => Ok(vec![1.0; count]),
            MagnitudeRule::AbsNormal { seed } => {
                let mut s = derive_stream_in(Domain::Magnitudes, *seed, m, 0);
                Ok((0..count)
                    .map(|_| loop {
                        let z: f64 = StandardNormal.sample(&mut s);
                        if z != 0.0 {
                            break z.abs();
                        }
                    })
                    .collect())
            }
            MagnitudeRule::TwoPoint {
                low,
                high,
                p_high,
                seed,
            } => {
                let mut s = derive_stream_in(Domain::Magnitudes, *seed, m, 0);
                Ok((0..count)
                    .map(|_| {
                        if s.random::<f64>() < *p_high {
                            *high
                        } else {
                            *low
                        }
                    })
                    .collect())
            }
            MagnitudeRule::Explicit(v) => {
                if v.len() != count {
                    return Err(Error::invalid(
                        "magnitudes",
                        alloc::format!(
                            "explicit list has {} entries, row size {m} needs {count}",
                            v.len()
                        ),
                    ));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Pairwise correlation of the equicorrelated family, possibly depending on m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoRule {
    Const(f64),
    /// `rho = c / m`.
    OverM { c: f64 },
}

impl RhoRule {
    pub fn at(self, m: usize) -> Result<f64> {
        let rho = match self {
            RhoRule::Const(r) => r,
            RhoRule::OverM { c } => c / m as f64,
        };
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::invalid(
                "rho",
                alloc::format!("rho = {rho} at m = {m} is outside [0, 1)"),
            ));
        }
        Ok(rho)
    }

    pub fn vanishes(self) -> bool {
        match self {
            RhoRule::Const(r) => r == 0.0,
            RhoRule::OverM { .. } => true,
        }
    }
}

/// Half-width of the per-row scale law of the mixture family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    Const(f64),
    /// `delta = scale * m^exponent`.
    Power { scale: f64, exponent: f64 },
}

impl DeltaRule {
    pub fn at(self, m: usize) -> Result<f64> {
        let delta = match self {
            DeltaRule::Const(d) => d,
            DeltaRule::Power { scale, exponent } => scale * libm::pow(m as f64, exponent),
        };
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::invalid(
                "delta",
                alloc::format!("delta = {delta} at m = {m} is outside [0, 1)"),
            ));
        }
        Ok(delta)
    }

    pub fn vanishes(self) -> bool {
        match self {
            DeltaRule::Const(d) => d == 0.0,
            DeltaRule::Power { scale, exponent } => scale == 0.0 || exponent < 0.0,
        }
    }
}

/// A parameterized exchangeable family.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    IidSymmetric { law: SymmetricLaw },
    RademacherMagnitude { magnitudes: MagnitudeRule },
    /// `magnitudes` gives the m/2 pair magnitudes `c_j`; the base row is
    /// `+c_1, -c_1, ..., +c_{m/2}, -c_{m/2}` after normalization.
    ZeroSumPermutation { magnitudes: MagnitudeRule },
    EquicorrelatedGaussian { rho: RhoRule },
    ScaleMixture { delta: DeltaRule },
}

impl GeneratorSpec {
    pub fn family(&self) -> Family {
        match self {
            GeneratorSpec::IidSymmetric { .. } => Family::IidSymmetric,
            GeneratorSpec::RademacherMagnitude { .. } => Family::RademacherMagnitude,
            GeneratorSpec::ZeroSumPermutation { .. } => Family::ZeroSumPermutation,
            GeneratorSpec::EquicorrelatedGaussian { .. } => Family::EquicorrelatedGaussian,
            GeneratorSpec::ScaleMixture { .. } => Family::ScaleMixture,
        }
    }

    /// Instantiates the family at row size `m`: evaluates m-dependent
    /// parameters and draws and normalizes fixed magnitudes.
    pub fn sampler(&self, m: usize) -> Result<RowSampler> {
        if m == 0 {
            return Err(Error::invalid("m", "row size must be >= 1"));
        }
        Ok(match self {
            GeneratorSpec::IidSymmetric { law } => RowSampler::Iid { law: *law, m },
            GeneratorSpec::RademacherMagnitude { magnitudes } => {
                let raw = magnitudes.draw(m, m)?;
                RowSampler::RademacherMagnitude(NormalizedMagnitudes::new(normalize_magnitudes(
                    &raw,
                )?)?)
            }
            GeneratorSpec::ZeroSumPermutation { magnitudes } => {
                if !m.is_multiple_of(2) {
                    return Err(Error::invalid(
                        "m",
                        alloc::format!("zero_sum_permutation needs even m, got {m}"),
                    ));
                }
                let raw = magnitudes.draw(m / 2, m)?;
                RowSampler::ZeroSum(PairedBase::from_magnitudes(&raw)?)
            }
            GeneratorSpec::EquicorrelatedGaussian { rho } => RowSampler::Equicorrelated {
                rho: rho.at(m)?,
                m,
            },
            GeneratorSpec::ScaleMixture { delta } => RowSampler::ScaleMixture {
                delta: delta.at(m)?,
                m,
            },
        })
    }
}

/// Machine-readable hypotheses a family is known to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypothesisProfile {
    pub exchangeable_by_construction: bool,
    pub marginal_symmetric: bool,
    pub jointly_sign_symmetric: bool,
    pub extendable: bool,
    pub cond1_expected: bool,
    pub cond2_expected: bool,
    pub cond3_lemma_expected: bool,
    pub cond3_theorem_expected: bool,
}

pub fn hypothesis_profile(spec: &GeneratorSpec) -> HypothesisProfile {
    let all = HypothesisProfile {
        exchangeable_by_construction: true,
        marginal_symmetric: true,
        jointly_sign_symmetric: true,
        extendable: true,
        cond1_expected: true,
        cond2_expected: true,
        cond3_lemma_expected: true,
        cond3_theorem_expected: true,
    };
    match spec {
        GeneratorSpec::IidSymmetric { .. } => all,
        GeneratorSpec::RademacherMagnitude { .. } => HypothesisProfile {
            extendable: false,
            ..all
        },
        // Flipping the sign of one coordinate of a permuted (+1, -1) pair
        // moves the joint law from the anti-diagonal to the diagonal.
        GeneratorSpec::ZeroSumPermutation { .. } => HypothesisProfile {
            jointly_sign_symmetric: false,
            extendable: false,
            ..all
        },
        GeneratorSpec::EquicorrelatedGaussian { rho } => {
            let vanishing = rho.vanishes();
            HypothesisProfile {
                jointly_sign_symmetric: *rho == RhoRule::Const(0.0),
                cond1_expected: vanishing,
                cond3_lemma_expected: vanishing,
                cond3_theorem_expected: vanishing,
                ..all
            }
        }
        GeneratorSpec::ScaleMixture { delta } => {
            let vanishing = delta.vanishes();
            HypothesisProfile {
                cond3_lemma_expected: vanishing,
                cond3_theorem_expected: vanishing,
                ..all
            }
        }
    }
}

/// Scales `raw` by one positive constant so that its mean square is one.
pub fn normalize_magnitudes(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::invalid("magnitudes", "empty"));
    }
    if raw.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::invalid(
            "magnitudes",
            "entries must be finite and > 0",
        ));
    }
    let rms = libm::sqrt(sum::sum_sq(raw) / raw.len() as f64);
    Ok(raw.iter().map(|x| x / rms).collect())
}

fn mean_square(values: &[f64]) -> f64 {
    sum::sum_sq(values) / values.len() as f64
}

/// Positive magnitudes with unit mean square.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMagnitudes(Vec<f64>);

impl NormalizedMagnitudes {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid(
                "magnitudes",
                "must be nonempty, finite and > 0",
            ));
        }
        let ms = mean_square(&values);
        if (ms - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::invalid(
                "magnitudes",
                alloc::format!("mean square {ms} is not 1"),
            ));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Normalized base row made of exact `+c, -c` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedBase(Vec<f64>);

impl PairedBase {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(Error::invalid(
                "base_values",
                alloc::format!("length must be even and positive, got {}", values.len()),
            ));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("base_values", "entries must be finite"));
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let n = sorted.len();
        if (0..n / 2).any(|i| sorted[i] != -sorted[n - 1 - i]) {
            return Err(Error::invalid(
                "base_values",
                "entries do not form exact +c/-c pairs",
            ));
        }
        let ms = mean_square(&values);
        if (ms - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::invalid(
                "base_values",
                alloc::format!("mean square {ms} is not 1"),
            ));
        }
        Ok(Self(values))
    }

    /// Builds `+c_1, -c_1, ...` from raw pair magnitudes and normalizes.
    pub fn from_magnitudes(raw: &[f64]) -> Result<Self> {
        let c = normalize_magnitudes(raw)?;
        Self::new(c.iter().flat_map(|&x| [x, -x]).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One realized row of the triangular array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayRow {
    values: Vec<f64>,
    generator: Family,
    seed_info: SeedInfo,
}

impl ArrayRow {
    pub fn new(values: Vec<f64>, generator: Family, seed_info: SeedInfo) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("row", "empty row"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("row", "non-finite entry"));
        }
        Ok(Self {
            values,
            generator,
            seed_info,
        })
    }

    /// Row built from literal values, with zeroed provenance.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(
            values,
            Family::IidSymmetric,
            SeedInfo {
                master_seed: 0,
                m: 0,
                replicate: 0,
            },
        )
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn generator(&self) -> Family {
        self.generator
    }

    pub fn seed_info(&self) -> SeedInfo {
        self.seed_info
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            generator: self.generator,
            seed_info: self.seed_info,
        }
    }
}

impl Deref for ArrayRow {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// A family instantiated at one row size.
#[derive(Debug, Clone, PartialEq)]
pub enum RowSampler {
    Iid { law: SymmetricLaw, m: usize },
    RademacherMagnitude(NormalizedMagnitudes),
    ZeroSum(PairedBase),
    Equicorrelated { rho: f64, m: usize },
    ScaleMixture { delta: f64, m: usize },
}

impl RowSampler {
    pub fn m(&self) -> usize {
        match self {
            RowSampler::Iid { m, .. }
            | RowSampler::Equicorrelated { m, .. }
            | RowSampler::ScaleMixture { m, .. } => *m,
            RowSampler::RademacherMagnitude(mag) => mag.as_slice().len(),
            RowSampler::ZeroSum(base) => base.as_slice().len(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            RowSampler::Iid { .. } => Family::IidSymmetric,
            RowSampler::RademacherMagnitude(_) => Family::RademacherMagnitude,
            RowSampler::ZeroSum(_) => Family::ZeroSumPermutation,
            RowSampler::Equicorrelated { .. } => Family::EquicorrelatedGaussian,
            RowSampler::ScaleMixture { .. } => Family::ScaleMixture,
        }
    }

    /// Overwrites `buf` with a fresh row.
    pub fn fill(&self, stream: &mut Stream, buf: &mut Vec<f64>) {
        buf.clear();
        match self {
            RowSampler::Iid { law, m } => fill_iid(*law, *m, stream, buf),
            RowSampler::RademacherMagnitude(mag) => {
                buf.extend_from_slice(mag.as_slice());
                buf.shuffle(stream);
                apply_random_signs(stream, buf);
            }
            RowSampler::ZeroSum(base) => {
                buf.extend_from_slice(base.as_slice());
                buf.shuffle(stream);
            }
            RowSampler::Equicorrelated { rho, m } => {
                if *rho == 0.0 {
                    fill_iid(SymmetricLaw::StdNormal, *m, stream, buf);
                } else {
                    let shared: f64 = StandardNormal.sample(stream);
                    let common = libm::sqrt(*rho) * shared;
                    let own = libm::sqrt(1.0 - rho);
                    buf.extend((0..*m).map(|_| {
                        let z: f64 = StandardNormal.sample(stream);
                        common + own * z
                    }));
                }
            }
            RowSampler::ScaleMixture { delta, m } => {
                if *delta == 0.0 {
                    fill_iid(SymmetricLaw::StdNormal, *m, stream, buf);
                } else {
                    let sigma = stream.random_range(1.0 - delta..=1.0 + delta);
                    buf.extend((0..*m).map(|_| {
                        let z: f64 = StandardNormal.sample(stream);
                        sigma * z
                    }));
                }
            }
        }
    }

    pub fn sample(&self, stream: &mut Stream) -> ArrayRow {
        let mut buf = Vec::with_capacity(self.m());
        self.fill(stream, &mut buf);
        ArrayRow {
            values: buf,
            generator: self.family(),
            seed_info: stream.info(),
        }
    }
}

fn fill_iid(law: SymmetricLaw, m: usize, stream: &mut Stream, buf: &mut Vec<f64>) {
    match law {
        SymmetricLaw::StdNormal => {
            buf.extend((0..m).map(|_| -> f64 { StandardNormal.sample(stream) }))
        }
        SymmetricLaw::Rademacher => {
            buf.resize(buf.len() + m, 1.0);
            let start = buf.len() - m;
            apply_random_signs(stream, &mut buf[start..]);
        }
        SymmetricLaw::UniformSym => {
            let u = Uniform::new_inclusive(-SQRT_3, SQRT_3).expect("finite bounds");
            buf.extend((0..m).map(|_| u.sample(stream)));
        }
    }
}

/// Multiplies each entry by an independent fair sign, 64 signs per draw.
fn apply_random_signs<R: RngCore + ?Sized>(rng: &mut R, values: &mut [f64]) {
    for chunk in values.chunks_mut(64) {
        let bits = rng.next_u64();
        for (i, v) in chunk.iter_mut().enumerate() {
            if (bits >> i) & 1 == 1 {
                *v = -*v;
            }
        }
    }
}

pub fn gen_iid_symmetric(law: SymmetricLaw, m: usize, stream: &mut Stream) -> Result<ArrayRow> {
    Ok(GeneratorSpec::IidSymmetric { law }.sampler(m)?.sample(stream))
}

pub fn gen_rademacher_magnitude(magnitudes: &NormalizedMagnitudes, stream: &mut Stream) -> ArrayRow {
    RowSampler::RademacherMagnitude(magnitudes.clone()).sample(stream)
}

pub fn gen_zero_sum_permutation(base: &PairedBase, stream: &mut Stream) -> ArrayRow {
    RowSampler::ZeroSum(base.clone()).sample(stream)
}

pub fn gen_equicorrelated_gaussian(rho: f64, m: usize, stream: &mut Stream) -> Result<ArrayRow> {
    Ok(GeneratorSpec::EquicorrelatedGaussian {
        rho: RhoRule::Const(rho),
    }
    .sampler(m)?
    .sample(stream))
}

pub fn gen_scale_mixture(delta: f64, m: usize, stream: &mut Stream) -> Result<ArrayRow> {
    Ok(GeneratorSpec::ScaleMixture {
        delta: DeltaRule::Const(delta),
    }
    .sampler(m)?
    .sample(stream))
}
