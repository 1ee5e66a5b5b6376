//! Input distributions and the closed-form mismatch error metric.
//!
//! For a fixed mapping the receiver error of codeword `x` is
//! `e(x) = sum_i (W_i(x) - p_i) * delta_i` with `p_i = E_x[W_i(x)]`. Because
//! the deltas are independent with variance `B_i * sigma^2` and `W_i` is 0/1,
//! the mean square over inputs and instances collapses to
//! `sigma^2 * sum_i p_i (1 - p_i) B_i`. [`MetricValue::raw`] is that sum.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::basis::{check_len, Basis, MismatchRealization, SelectionVector};
use crate::error::{Error, Result};
use crate::mapping::RepresentationTable;
use crate::MAX_BITS;

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PmfKind {
    Uniform,
    /// Hard-clipped Gaussian centred on mid-scale, std in LSB.
    ClippedGaussian { sigma_s: f64 },
    Custom,
}

impl fmt::Display for PmfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PmfKind::Uniform => f.write_str("uniform"),
            PmfKind::ClippedGaussian { sigma_s } => write!(f, "clipped-gaussian({sigma_s})"),
            PmfKind::Custom => f.write_str("custom"),
        }
    }
}

/// Probability of each codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPmf {
    probs: Vec<f64>,
    kind: PmfKind,
}

impl InputPmf {
    pub fn uniform(n_bits: u32) -> Result<Self> {
        let n = codeword_count(n_bits)?;
        Ok(InputPmf { probs: vec![1.0 / n as f64; n], kind: PmfKind::Uniform })
    }

    /// Gaussian of std `sigma_s` LSB centred at `(2^N - 1) / 2`, binned to the
    /// nearest codeword, with both tails folded into the end codes.
    pub fn gaussian(n_bits: u32, sigma_s: f64) -> Result<Self> {
        let n = codeword_count(n_bits)?;
        if !(sigma_s > 0.0 && sigma_s.is_finite()) {
            return Err(Error::Config(format!("Gaussian input std must be positive, got {sigma_s}")));
        }
        let mu = (n as f64 - 1.0) / 2.0;
        // mass between two boundaries, using the upper tail where it is
        // more accurate
        let mass = |lo: f64, hi: f64| {
            let (zl, zh) = ((lo - mu) / sigma_s, (hi - mu) / sigma_s);
            if zl > 0.0 {
                upper_tail(zl) - upper_tail(zh)
            } else {
                lower_tail(zh) - lower_tail(zl)
            }
        };
        let mut probs: Vec<f64> = (0..n)
            .map(|x| {
                let lo = if x == 0 { f64::NEG_INFINITY } else { x as f64 - 0.5 };
                let hi = if x == n - 1 { f64::INFINITY } else { x as f64 + 0.5 };
                mass(lo, hi)
            })
            .collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(InputPmf { probs, kind: PmfKind::ClippedGaussian { sigma_s } })
    }

    /// Arbitrary distribution; length must be a power of two and the mass
    /// must already sum to one (it is renormalized to remove rounding).
    pub fn custom(probs: Vec<f64>) -> Result<Self> {
        let n = probs.len();
        if n < 2 || !n.is_power_of_two() || n > 1usize << MAX_BITS {
            return Err(Error::Config(format!("pmf length {n} is not 2^N for N in 1..={MAX_BITS}")));
        }
        if let Some(x) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config(format!("pmf entry {x} is negative or not finite")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("pmf sums to {total}, expected 1")));
        }
        Ok(InputPmf { probs: probs.into_iter().map(|p| p / total).collect(), kind: PmfKind::Custom })
    }

    /// All mass on one codeword.
    pub fn point(n_bits: u32, codeword: u32) -> Result<Self> {
        let n = codeword_count(n_bits)?;
        let mut probs = vec![0.0; n];
        *probs
            .get_mut(codeword as usize)
            .ok_or_else(|| Error::Config(format!("codeword {codeword} out of range")))? = 1.0;
        Ok(InputPmf { probs, kind: PmfKind::Custom })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, codeword: u32) -> f64 {
        self.probs[codeword as usize]
    }

    pub fn kind(&self) -> PmfKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn n_bits(&self) -> u32 {
        self.probs.len().trailing_zeros()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(x, p)| x as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probs.iter().enumerate().map(|(x, p)| p * (x as f64 - m).powi(2)).sum()
    }

    /// Checks the distribution invariants.
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE || self.probs.iter().any(|p| *p < 0.0) {
            return Err(Error::Invariant(format!("pmf is not normalized (sum {total})")));
        }
        Ok(())
    }
}

fn codeword_count(n_bits: u32) -> Result<usize> {
    if n_bits == 0 || n_bits > MAX_BITS {
        return Err(Error::Config(format!("n_bits must be in 1..={MAX_BITS}, got {n_bits}")));
    }
    Ok(1usize << n_bits)
}

fn lower_tail(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn normal_density(s: f64, sigma: f64) -> f64 {
    let z = s / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson panels per standard deviation of the input.
const PANELS_PER_SIGMA: f64 = 128.0;
const TAIL_SIGMAS: f64 = 12.0;

/// Mean square quantization error of a continuous `N(0, sigma^2)` signal
/// through the mid-scale-centred, clipping `N`-bit quantizer.
pub fn quantization_mse(n_bits: u32, sigma: f64) -> f64 {
    let m = 1usize << n_bits;
    let mu = (m as f64 - 1.0) / 2.0;
    let reach = TAIL_SIGMAS * sigma + 1.0;
    let mut total = 0.0;
    // granular cells 1..m-2 plus the two overload regions
    let boundary = |k: usize| k as f64 + 0.5 - mu;
    let cell_panels = ((PANELS_PER_SIGMA / sigma).ceil() as usize).clamp(4, 128);
    for c in 1..m.saturating_sub(1) {
        let (a, b) = (boundary(c - 1), boundary(c));
        if b < -reach || a > reach {
            continue;
        }
        let centre = c as f64 - mu;
        total += simpson(|s| (s - centre).powi(2) * normal_density(s, sigma), a, b, cell_panels);
    }
    let tail_panels = |len: f64| ((len / sigma * PANELS_PER_SIGMA).ceil() as usize).max(256);
    let low_edge = boundary(0);
    if low_edge > -reach {
        let centre = -mu;
        total += simpson(
            |s| (s - centre).powi(2) * normal_density(s, sigma),
            -reach,
            low_edge,
            tail_panels(low_edge + reach),
        );
    }
    let high_edge = boundary(m - 2);
    if high_edge < reach {
        let centre = mu;
        total += simpson(
            |s| (s - centre).powi(2) * normal_density(s, sigma),
            high_edge,
            reach,
            tail_panels(reach - high_edge),
        );
    }
    total
}

/// Linear SQNR of the clipped Gaussian input at std `sigma` LSB.
pub fn sqnr(n_bits: u32, sigma: f64) -> f64 {
    sigma * sigma / quantization_mse(n_bits, sigma)
}

/// Grid step of [`optimal_rms`], in LSB.
pub const RMS_GRID_STEP: f64 = 0.5;

/// Input std (LSB) on a 0.5-LSB grid in `(0, 2^N]` that maximizes SQNR.
///
/// SQNR is unimodal in the input level (granular noise falls, overload
/// rises), so the grid is narrowed by ternary search and the remaining
/// window is scanned exhaustively.
pub fn optimal_rms(n_bits: u32) -> f64 {
    let n_bits = n_bits.clamp(1, MAX_BITS);
    let score = |k: usize| sqnr(n_bits, k as f64 * RMS_GRID_STEP);
    let (mut lo, mut hi) = (1usize, 2usize << n_bits);
    while hi - lo > 8 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if score(m1) < score(m2) {
            lo = m1 + 1;
        } else {
            hi = m2 - 1;
        }
    }
    let best = (lo.saturating_sub(2).max(1)..=hi + 2)
        .map(|k| (k, score(k)))
        .fold((0usize, f64::NEG_INFINITY), |acc, (k, s)| if s > acc.1 { (k, s) } else { acc });
    best.0 as f64 * RMS_GRID_STEP
}

/// Gaussian input at the SQNR-optimal level.
pub fn optimal_gaussian_pmf(n_bits: u32) -> Result<InputPmf> {
    InputPmf::gaussian(n_bits, optimal_rms(n_bits))
}

/// Probability that each switch is on, `p_i = E_x[W_i(x)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationProfile {
    means: Vec<f64>,
}

impl ActivationProfile {
    pub fn compute(mapping: &RepresentationTable, pmf: &InputPmf) -> Result<Self> {
        check_len(mapping.len(), pmf.len())?;
        let mut means = vec![0.0; mapping.switch_count()];
        for (row, &p) in mapping.rows().iter().zip(pmf.probs()) {
            for i in row.ones() {
                means[i] += p;
            }
        }
        Ok(ActivationProfile { means })
    }

    pub fn from_means(means: Vec<f64>) -> Self {
        ActivationProfile { means }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// `sum_i p_i (1 - p_i) B_i`.
    pub fn raw_metric(&self, basis: &Basis) -> Result<f64> {
        check_len(basis.len(), self.means.len())?;
        Ok(raw_from_means(&self.means, basis.weights()))
    }
}

pub(crate) fn raw_from_means(means: &[f64], weights: &[u32]) -> f64 {
    means.iter().zip(weights).map(|(&p, &w)| p * (1.0 - p) * f64::from(w)).sum()
}

pub fn activation_profile(mapping: &RepresentationTable, pmf: &InputPmf) -> Result<ActivationProfile> {
    ActivationProfile::compute(mapping, pmf)
}

/// Mismatch metric of one architecture under one input distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricValue {
    /// `sum_i p_i (1 - p_i) B_i`, the mean square error in units of `sigma^2`.
    pub raw: f64,
    /// `raw` divided by the thermometer decoder's `raw` under the same input.
    pub normalized: f64,
    /// `sigma^2 * raw`.
    pub mse: f64,
}

/// `raw` metric of the canonical thermometer decoder, whose cell `i` is on
/// whenever `x > i`.
///
/// Accumulates in the same order as [`ActivationProfile::compute`] on the
/// canonical thermometer table, so that table normalizes to exactly 1.
pub fn thermometer_raw(pmf: &InputPmf) -> f64 {
    let cells = pmf.len() - 1;
    let mut means = vec![0.0; cells];
    for (x, &p) in pmf.probs().iter().enumerate() {
        for m in &mut means[..x] {
            *m += p;
        }
    }
    means.iter().map(|&p| p * (1.0 - p)).sum()
}

pub(crate) fn normalize(raw: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        raw / reference
    } else {
        0.0
    }
}

pub fn mismatch_mse(
    mapping: &RepresentationTable,
    basis: &Basis,
    pmf: &InputPmf,
    sigma_delta: f64,
) -> Result<MetricValue> {
    mapping.validate(basis)?;
    let raw = ActivationProfile::compute(mapping, pmf)?.raw_metric(basis)?;
    Ok(MetricValue { raw, normalized: normalize(raw, thermometer_raw(pmf)), mse: sigma_delta * sigma_delta * raw })
}

/// Receiver-side error `sum_i (w_i - p_i) delta_i` for one codeword's row.
pub fn receiver_error(w: &SelectionVector, profile: &ActivationProfile, delta: &MismatchRealization) -> Result<f64> {
    check_len(profile.means.len(), w.len())?;
    check_len(profile.means.len(), delta.len())?;
    Ok(w.bits()
        .iter()
        .zip(&profile.means)
        .zip(delta.deltas())
        .map(|((&b, &p), &d)| (f64::from(u8::from(b)) - p) * d)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{ArchitectureKind, SegmentSpec};
    use rand::SeedableRng;

    /// Closed-form `int_a^b (s - c)^2 phi_sigma(s) ds` from the first three
    /// truncated Gaussian moments.
    fn cell_error_closed_form(a: f64, b: f64, c: f64, sigma: f64) -> f64 {
        let cdf = |s: f64| if s.is_infinite() { if s > 0.0 { 1.0 } else { 0.0 } } else { lower_tail(s / sigma) };
        let dens = |s: f64| if s.is_infinite() { 0.0 } else { normal_density(s, sigma) };
        let sdens = |s: f64| if s.is_infinite() { 0.0 } else { s * normal_density(s, sigma) };
        let m0 = cdf(b) - cdf(a);
        let m1 = sigma * sigma * (dens(a) - dens(b));
        let m2 = sigma * sigma * (m0 + sdens(a) - sdens(b));
        m2 - 2.0 * c * m1 + c * c * m0
    }

    fn quantization_mse_closed_form(n_bits: u32, sigma: f64) -> f64 {
        let m = 1usize << n_bits;
        let mu = (m as f64 - 1.0) / 2.0;
        (0..m)
            .map(|c| {
                let a = if c == 0 { f64::NEG_INFINITY } else { c as f64 - 0.5 - mu };
                let b = if c == m - 1 { f64::INFINITY } else { c as f64 + 0.5 - mu };
                cell_error_closed_form(a, b, c as f64 - mu, sigma)
            })
            .sum()
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for &(n, s) in &[(8, 10.0), (8, 37.5), (8, 80.0), (3, 1.5), (1, 0.6)] {
            let num = quantization_mse(n, s);
            let exact = quantization_mse_closed_form(n, s);
            assert!((num / exact - 1.0).abs() < 1e-6, "N={n} sigma={s}: {num} vs {exact}");
        }
    }

    #[test]
    fn optimal_rms_8bit_matches_full_sweep() {
        // independent full sweep of the 0.5-LSB grid with the closed form
        let (best_k, _) = (1..=512)
            .map(|k| {
                let s = k as f64 * 0.5;
                (k, s * s / quantization_mse_closed_form(8, s))
            })
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let opt = optimal_rms(8);
        assert_eq!(opt, best_k as f64 * 0.5);
        assert!((30.0..=70.0).contains(&opt));
        assert_eq!(opt, GOLDEN_RMS_8BIT);
        let at = sqnr(8, opt);
        assert!(at >= sqnr(8, opt - 0.5) && at >= sqnr(8, opt + 0.5));
    }

    /// Frozen from the closed-form sweep above (SQNR 40.57 dB).
    const GOLDEN_RMS_8BIT: f64 = 32.5;

    #[test]
    fn optimal_rms_one_bit() {
        let opt = optimal_rms(1);
        assert!(opt > 0.0 && sqnr(1, opt).is_finite());
        assert!(sqnr(1, opt) >= sqnr(1, opt + 0.5));
    }

    #[test]
    fn gaussian_pmf_shape() {
        let p = InputPmf::gaussian(8, 40.0).unwrap();
        p.validate().unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for x in 0..128u32 {
            assert!((p.prob(x) - p.prob(255 - x)).abs() < 1e-15);
        }
        assert!((p.mean() - 127.5).abs() < 1e-9);
        // wide input: interior nearly flat, edges collect the tails
        let wide = InputPmf::gaussian(8, 1e4).unwrap();
        assert!((wide.prob(100) / wide.prob(150) - 1.0).abs() < 1e-3);
        assert!(wide.prob(0) > 100.0 * wide.prob(1));
        assert!(wide.prob(0) > 0.49);
        assert!(InputPmf::gaussian(8, 0.0).is_err());
    }

    #[test]
    fn custom_pmf_checks() {
        assert!(InputPmf::custom(vec![0.5, 0.5]).is_ok());
        assert!(InputPmf::custom(vec![0.5, 0.25, 0.25]).is_err());
        assert!(InputPmf::custom(vec![0.5, 0.6]).is_err());
        assert!(InputPmf::custom(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn activation_examples() {
        let b = Basis::binary(8).unwrap();
        let t = ArchitectureKind::Binary.canonical_mapping(&b).unwrap();
        let u = InputPmf::uniform(8).unwrap();
        let prof = activation_profile(&t, &u).unwrap();
        assert!(prof.means().iter().all(|&m| (m - 0.5).abs() < 1e-15));

        let pt = InputPmf::point(8, 77).unwrap();
        let prof = activation_profile(&t, &pt).unwrap();
        for (i, &m) in prof.means().iter().enumerate() {
            assert_eq!(m, f64::from((77 >> i) & 1));
        }

        let th = Basis::thermometer(8).unwrap();
        let tt = ArchitectureKind::Thermometer.canonical_mapping(&th).unwrap();
        let prof = activation_profile(&tt, &u).unwrap();
        for (i, &m) in prof.means().iter().enumerate() {
            assert!((m - (255 - i) as f64 / 256.0).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_examples() {
        let u = InputPmf::uniform(8).unwrap();
        let b = Basis::binary(8).unwrap();
        let t = ArchitectureKind::Binary.canonical_mapping(&b).unwrap();
        let v = mismatch_mse(&t, &b, &u, 0.05).unwrap();
        assert!((v.raw - 63.75).abs() < 1e-12);
        assert!((v.mse - 0.0025 * 63.75).abs() < 1e-12);

        let pt = InputPmf::point(8, 200).unwrap();
        assert_eq!(mismatch_mse(&t, &b, &pt, 0.05).unwrap().raw, 0.0);

        let th = Basis::thermometer(8).unwrap();
        let tt = ArchitectureKind::Thermometer.canonical_mapping(&th).unwrap();
        for pmf in [u.clone(), InputPmf::gaussian(8, 37.0).unwrap()] {
            let v = mismatch_mse(&tt, &th, &pmf, 0.05).unwrap();
            assert_eq!(v.normalized, 1.0);
            assert!((v.raw - thermometer_raw(&pmf)).abs() < 1e-9);
        }
    }

    #[test]
    fn metric_is_sigma_free() {
        let g = InputPmf::gaussian(8, 37.0).unwrap();
        let spec = SegmentSpec::new(3, 8).unwrap();
        let b = Basis::segmented(spec, 8).unwrap();
        let t = ArchitectureKind::Segmented(spec).canonical_mapping(&b).unwrap();
        let a = mismatch_mse(&t, &b, &g, 0.01).unwrap();
        let c = mismatch_mse(&t, &b, &g, 0.2).unwrap();
        assert_eq!(a.raw, c.raw);
        assert!((c.mse / a.mse - 400.0).abs() < 1e-9);
        assert!(a.raw <= b.total_weight() as f64 / 4.0);
    }

    #[test]
    fn receiver_error_examples() {
        let g = InputPmf::gaussian(6, 12.0).unwrap();
        let b = Basis::binary(6).unwrap();
        let t = ArchitectureKind::Binary.canonical_mapping(&b).unwrap();
        let prof = activation_profile(&t, &g).unwrap();
        let zero = MismatchRealization::zero(6);
        assert_eq!(receiver_error(t.row(9), &prof, &zero).unwrap(), 0.0);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let d = MismatchRealization::sample(&b, 0.05, &mut rng);
        let weighted: f64 =
            (0..64u32).map(|x| g.prob(x) * receiver_error(t.row(x), &prof, &d).unwrap()).sum();
        assert!(weighted.abs() < 1e-15);

        let pt = InputPmf::point(6, 9).unwrap();
        let prof = activation_profile(&t, &pt).unwrap();
        assert_eq!(receiver_error(t.row(9), &prof, &d).unwrap(), 0.0);
    }
}
