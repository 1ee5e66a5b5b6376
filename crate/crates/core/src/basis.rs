//! Current-source weight bases, switch selection vectors and mismatch draws.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::RepresentationTable;
use crate::MAX_BITS;

/// Nominal current weights of an `L`-switch DAC with `n_bits`-wide codewords.
///
/// Weights are unit-current multiples kept in the order given; that order is
/// the bit order of every [`SelectionVector`] bound to this basis.
/// Completeness is not a construction invariant so that candidate bases can
/// be represented and rejected; see [`crate::repset::is_complete`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Basis {
    n_bits: u32,
    weights: Vec<u32>,
}

impl Basis {
    pub fn new(n_bits: u32, weights: Vec<u32>) -> Result<Self> {
        check_bits(n_bits)?;
        if weights.is_empty() {
            return Err(Error::Config("basis must contain at least one weight".into()));
        }
        if let Some(pos) = weights.iter().position(|&w| w == 0) {
            return Err(Error::Config(format!("weight at index {pos} is zero; weights must be >= 1")));
        }
        Ok(Basis { n_bits, weights })
    }

    /// Powers of two `[1, 2, ..., 2^(N-1)]`.
    pub fn binary(n_bits: u32) -> Result<Self> {
        check_bits(n_bits)?;
        Ok(Basis { n_bits, weights: (0..n_bits).map(|i| 1u32 << i).collect() })
    }

    /// `2^N - 1` unit weights.
    pub fn thermometer(n_bits: u32) -> Result<Self> {
        check_bits(n_bits)?;
        Ok(Basis { n_bits, weights: vec![1; (1usize << n_bits) - 1] })
    }

    /// Binary LSB weights followed by `2^M - 1` unary cells of weight `2^(N-M)`.
    pub fn segmented(spec: SegmentSpec, n_bits: u32) -> Result<Self> {
        check_bits(n_bits)?;
        if spec.total_bits() != n_bits {
            return Err(Error::Config(format!(
                "segmentation {spec} does not describe a {n_bits}-bit converter"
            )));
        }
        let mut weights: Vec<u32> = (0..spec.binary_bits).map(|i| 1u32 << i).collect();
        let unit = 1u32 << spec.binary_bits;
        weights.extend(std::iter::repeat_n(unit, (1usize << spec.unary_bits) - 1));
        Ok(Basis { n_bits, weights })
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Number of switches `L`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of codewords, `2^N`.
    pub fn codewords(&self) -> usize {
        1usize << self.n_bits
    }

    pub fn max_codeword(&self) -> u32 {
        (1u32 << self.n_bits) - 1
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().map(|&w| u64::from(w)).sum()
    }

    pub fn is_complete(&self) -> bool {
        crate::repset::is_complete(self)
    }

    /// Ascending-weight copy together with the permutation used:
    /// `sorted.weights()[k] == self.weights()[perm[k]]`. Equal weights keep
    /// their relative order.
    pub fn sorted(&self) -> (Basis, Vec<usize>) {
        let mut perm: Vec<usize> = (0..self.weights.len()).collect();
        perm.sort_by_key(|&i| self.weights[i]);
        let weights = perm.iter().map(|&i| self.weights[i]).collect();
        (Basis { n_bits: self.n_bits, weights }, perm)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} [", self.n_bits)?;
        for (i, w) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str("]")
    }
}

fn check_bits(n_bits: u32) -> Result<()> {
    if n_bits == 0 || n_bits > MAX_BITS {
        return Err(Error::Config(format!("n_bits must be in 1..={MAX_BITS}, got {n_bits}")));
    }
    Ok(())
}

/// Split of an `N`-bit segmented converter into thermometer-coded MSBs and
/// binary-weighted LSBs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub unary_bits: u32,
    pub binary_bits: u32,
}

impl SegmentSpec {
    pub fn new(unary_bits: u32, n_bits: u32) -> Result<Self> {
        if unary_bits > n_bits {
            return Err(Error::Config(format!(
                "cannot thermometer-code {unary_bits} MSBs of a {n_bits}-bit codeword"
            )));
        }
        Ok(SegmentSpec { unary_bits, binary_bits: n_bits - unary_bits })
    }

    pub fn total_bits(&self) -> u32 {
        self.unary_bits + self.binary_bits
    }

    pub fn switch_count(&self) -> usize {
        ((1usize << self.unary_bits) - 1) + self.binary_bits as usize
    }
}

impl fmt::Display for SegmentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}T+{}B", self.unary_bits, self.binary_bits)
    }
}

/// The three textbook weightings, each with a fixed decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchitectureKind {
    Binary,
    Thermometer,
    Segmented(SegmentSpec),
}

impl ArchitectureKind {
    fn name(&self) -> &'static str {
        match self {
            ArchitectureKind::Binary => "binary",
            ArchitectureKind::Thermometer => "thermometer",
            ArchitectureKind::Segmented(_) => "segmented",
        }
    }

    pub fn basis(&self, n_bits: u32) -> Result<Basis> {
        match *self {
            ArchitectureKind::Binary => Basis::binary(n_bits),
            ArchitectureKind::Thermometer => Basis::thermometer(n_bits),
            ArchitectureKind::Segmented(spec) => Basis::segmented(spec, n_bits),
        }
    }

    /// Fixed decoder of this architecture.
    ///
    /// Binary drives switch `i` from bit `i` of the codeword; thermometer
    /// turns on the first `x` cells; segmented decodes the low `N-M` bits in
    /// binary and turns on the first `x >> (N-M)` unary cells.
    pub fn canonical_mapping(&self, basis: &Basis) -> Result<RepresentationTable> {
        if self.basis(basis.n_bits())? != *basis {
            return Err(Error::KindMismatch { kind: self.name() });
        }
        let n = basis.n_bits();
        let l = basis.len();
        let binary_bits = match *self {
            ArchitectureKind::Binary => n,
            ArchitectureKind::Thermometer => 0,
            ArchitectureKind::Segmented(spec) => spec.binary_bits,
        };
        let rows = (0..basis.codewords() as u32)
            .map(|x| {
                let mut bits = vec![false; l];
                for (i, bit) in bits.iter_mut().enumerate().take(binary_bits as usize) {
                    *bit = (x >> i) & 1 == 1;
                }
                let unary_on = (x >> binary_bits) as usize;
                for bit in &mut bits[binary_bits as usize..binary_bits as usize + unary_on] {
                    *bit = true;
                }
                SelectionVector::new(bits)
            })
            .collect();
        RepresentationTable::new(basis, rows)
    }
}

/// Canonical decoder for `basis` under `kind`.
pub fn canonical_mapping(basis: &Basis, kind: ArchitectureKind) -> Result<RepresentationTable> {
    kind.canonical_mapping(basis)
}

/// On/off state of each switch, in basis order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionVector {
    bits: Vec<bool>,
}

impl SelectionVector {
    pub fn new(bits: Vec<bool>) -> Self {
        SelectionVector { bits }
    }

    /// Bit `i` of `mask` selects switch `i`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        SelectionVector { bits: (0..len).map(|i| i < 64 && (mask >> i) & 1 == 1).collect() }
    }

    /// Packed form when `len() <= 64`.
    pub fn to_mask(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(self.bits.iter().enumerate().fold(0u64, |m, (i, &b)| m | (u64::from(b) << i)))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// Indices of the switches that are on.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Nominal output `W^T B`.
    pub fn value(&self, basis: &Basis) -> Result<u64> {
        check_len(basis.len(), self.len())?;
        Ok(self.ones().map(|i| u64::from(basis.weights()[i])).sum())
    }

    /// `'0'`/`'1'` string with switch 0 leftmost.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse_bits(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(None, format!("invalid bit character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SelectionVector::new)
    }
}

/// One fabricated instance: static deviation of every source from nominal,
/// in unit-current units.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchRealization {
    deltas: Vec<f64>,
    sigma_delta: f64,
}

impl MismatchRealization {
    /// Independent zero-mean Gaussians with std `sqrt(B_i) * sigma_delta`.
    pub fn sample<R: Rng + ?Sized>(basis: &Basis, sigma_delta: f64, rng: &mut R) -> Self {
        let deltas = basis
            .weights()
            .iter()
            .map(|&w| {
                let z: f64 = rng.sample(StandardNormal);
                z * f64::from(w).sqrt() * sigma_delta
            })
            .collect();
        MismatchRealization { deltas, sigma_delta }
    }

    pub fn from_deltas(deltas: Vec<f64>, sigma_delta: f64) -> Self {
        MismatchRealization { deltas, sigma_delta }
    }

    pub fn zero(len: usize) -> Self {
        MismatchRealization { deltas: vec![0.0; len], sigma_delta: 0.0 }
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn sigma_delta(&self) -> f64 {
        self.sigma_delta
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Same mismatch shape at `k` times the amplitude.
    pub fn scaled(&self, k: f64) -> Self {
        MismatchRealization {
            deltas: self.deltas.iter().map(|d| d * k).collect(),
            sigma_delta: self.sigma_delta * k.abs(),
        }
    }
}

/// Analog output `sum_i w_i (B_i + delta_i)`.
pub fn dac_output(w: &SelectionVector, basis: &Basis, delta: &MismatchRealization) -> Result<f64> {
    check_len(basis.len(), w.len())?;
    check_len(basis.len(), delta.len())?;
    Ok(w.ones().map(|i| f64::from(basis.weights()[i]) + delta.deltas[i]).sum())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}
