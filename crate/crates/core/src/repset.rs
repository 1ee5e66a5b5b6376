//! Representation sets: every switch subset that decodes to a codeword.

use crate::basis::{Basis, SelectionVector};
use crate::error::{Error, Result};

/// Enumeration covers all `2^L` subsets, so `L` is capped here.
pub const MAX_ENUM_SWITCHES: usize = 20;

/// All representations of one codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentationSet {
    pub codeword: u32,
    pub members: Vec<SelectionVector>,
}

/// Per-codeword buckets of packed subset masks, ascending within a bucket.
/// Subsets whose sum exceeds the top codeword belong to no bucket.
#[derive(Debug, Clone)]
pub struct RepresentationIndex {
    switches: usize,
    buckets: Vec<Vec<u32>>,
}

impl RepresentationIndex {
    pub fn switches(&self) -> usize {
        self.switches
    }

    pub fn codewords(&self) -> usize {
        self.buckets.len()
    }

    /// Packed members of `R(x)`.
    pub fn members(&self, codeword: u32) -> &[u32] {
        &self.buckets[codeword as usize]
    }

    pub fn set(&self, codeword: u32) -> RepresentationSet {
        RepresentationSet {
            codeword,
            members: self
                .members(codeword)
                .iter()
                .map(|&m| SelectionVector::from_mask(u64::from(m), self.switches))
                .collect(),
        }
    }

    pub fn count(&self, codeword: u32) -> usize {
        self.buckets[codeword as usize].len()
    }

    pub fn total_members(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    /// Smallest codeword with no representation.
    pub fn first_empty(&self) -> Option<u32> {
        self.buckets.iter().position(Vec::is_empty).map(|x| x as u32)
    }

    pub fn is_complete(&self) -> bool {
        self.first_empty().is_none()
    }
}

/// Bucket all `2^L` subsets of `basis` by their sum.
pub fn enumerate_all(basis: &Basis) -> Result<RepresentationIndex> {
    let l = basis.len();
    if l > MAX_ENUM_SWITCHES {
        return Err(Error::Capacity { length: l, limit: MAX_ENUM_SWITCHES });
    }
    let top = u64::from(basis.max_codeword());
    let weights = basis.weights();
    let total = 1usize << l;
    // sums[m] = sums[m without its lowest bit] + weight of that bit
    let mut sums = vec![0u64; total];
    let mut buckets = vec![Vec::new(); basis.codewords()];
    buckets[0].push(0);
    for mask in 1..total {
        let low = mask.trailing_zeros() as usize;
        let s = sums[mask & (mask - 1)] + u64::from(weights[low]);
        sums[mask] = s;
        if s <= top {
            buckets[s as usize].push(mask as u32);
        }
    }
    Ok(RepresentationIndex { switches: l, buckets })
}

/// Reachable subset sums in `[0, 2^N - 1]` as a bitset, built one weight at
/// a time with shift-or.
fn reachable_sums(basis: &Basis) -> Vec<u64> {
    let n = basis.codewords();
    let words = n.div_ceil(64);
    let mut reach = vec![0u64; words];
    reach[0] = 1;
    for &w in basis.weights() {
        let w = w as usize;
        if w >= n {
            continue;
        }
        let (ws, bs) = (w / 64, w % 64);
        for dst in (ws..words).rev() {
            let src = dst - ws;
            let mut shifted = reach[src] << bs;
            if bs != 0 && src > 0 {
                shifted |= reach[src - 1] >> (64 - bs);
            }
            reach[dst] |= shifted;
        }
    }
    if n % 64 != 0 {
        reach[words - 1] &= (1u64 << (n % 64)) - 1;
    }
    reach
}

/// Smallest codeword that is not a subset sum of the weights.
pub fn first_unreachable(basis: &Basis) -> Option<u32> {
    let n = basis.codewords();
    let reach = reachable_sums(basis);
    (0..n).find(|&x| (reach[x / 64] >> (x % 64)) & 1 == 0).map(|x| x as u32)
}

/// Whether every codeword in `[0, 2^N - 1]` is a subset sum of the weights.
pub fn is_complete(basis: &Basis) -> bool {
    if basis.total_weight() < u64::from(basis.max_codeword()) {
        return false;
    }
    first_unreachable(basis).is_none()
}

/// Number of subsets summing to each codeword, by a counting recurrence over
/// the weights. Works for any `L`.
pub fn representation_counts(basis: &Basis) -> Vec<f64> {
    let n = basis.codewords();
    let mut counts = vec![0.0f64; n];
    counts[0] = 1.0;
    for &w in basis.weights() {
        let w = w as usize;
        for s in (w..n).rev() {
            counts[s] += counts[s - w];
        }
    }
    counts
}

/// Average `|R(x)|` over all codewords.
pub fn mean_representation_count(basis: &Basis) -> Result<f64> {
    let counts = representation_counts(basis);
    if let Some(x) = counts.iter().position(|&c| c == 0.0) {
        return Err(Error::Incomplete { missing: x as u32 });
    }
    Ok(counts.iter().sum::<f64>() / counts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use proptest::prelude::*;

    fn masks_of(sets: &RepresentationSet) -> Vec<String> {
        sets.members.iter().map(SelectionVector::to_bit_string).collect()
    }

    #[test]
    fn hand_enumeration() {
        let b = Basis::new(2, vec![1, 1, 2]).unwrap();
        let idx = enumerate_all(&b).unwrap();
        assert_eq!(masks_of(&idx.set(2)), vec!["110", "001"]);
        assert_eq!(idx.count(2), 2);
        assert!((mean_representation_count(&b).unwrap() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn binary_is_unique() {
        let b = Basis::binary(3).unwrap();
        let idx = enumerate_all(&b).unwrap();
        for x in 0..8 {
            assert_eq!(idx.count(x), 1);
        }
        assert_eq!(mean_representation_count(&b).unwrap(), 1.0);
    }

    #[test]
    fn l13_total_matches_brute_force() {
        let b = reference::published_basis(13).unwrap();
        let idx = enumerate_all(&b).unwrap();
        let brute = (0u32..1 << 13)
            .filter(|&m| {
                let s: u32 = (0..13).filter(|i| m >> i & 1 == 1).map(|i| b.weights()[i]).sum();
                s <= 255
            })
            .count();
        assert_eq!(idx.total_members(), brute);
        for x in 0..256u32 {
            for &m in idx.members(x) {
                assert_eq!(SelectionVector::from_mask(m.into(), 13).value(&b).unwrap(), u64::from(x));
            }
        }
        let mean = mean_representation_count(&b).unwrap();
        assert!((4.0..=256.0).contains(&mean), "mean |R| = {mean}");
    }

    #[test]
    fn completeness_examples() {
        assert!(is_complete(&Basis::binary(8).unwrap()));
        assert!(!is_complete(&Basis::new(8, vec![2, 4, 8, 16, 32, 64, 128, 128]).unwrap()));
        assert_eq!(first_unreachable(&Basis::new(3, vec![2, 4, 1]).unwrap()), None);
        assert_eq!(first_unreachable(&Basis::new(3, vec![1, 2, 2]).unwrap()), Some(6));
        for l in 9..=13 {
            assert!(is_complete(&reference::published_basis(l).unwrap()), "L={l}");
        }
        assert!(matches!(
            mean_representation_count(&Basis::new(3, vec![2, 4]).unwrap()),
            Err(Error::Incomplete { missing: 1 })
        ));
    }

    #[test]
    fn wide_weights_cross_word_boundaries() {
        // 10-bit: 1024 sums spread over 16 words
        let b = Basis::new(10, vec![1, 2, 4, 8, 16, 32, 64, 100, 200, 300, 300]).unwrap();
        let idx = enumerate_all(&b).unwrap();
        assert_eq!(first_unreachable(&b), idx.first_empty());
    }

    #[test]
    fn capacity_guard() {
        let b = Basis::thermometer(5).unwrap();
        assert!(matches!(enumerate_all(&b), Err(Error::Capacity { length: 31, limit: 20 })));
    }

    proptest! {
        #[test]
        fn bitset_agrees_with_enumeration(
            n in 2u32..=7,
            raw in proptest::collection::vec(1u32..70, 1..12),
        ) {
            let weights: Vec<u32> = raw.into_iter().map(|w| w.min((1 << n) - 1)).collect();
            let b = Basis::new(n, weights).unwrap();
            let idx = enumerate_all(&b).unwrap();
            prop_assert_eq!(is_complete(&b), idx.is_complete());
            prop_assert_eq!(first_unreachable(&b), idx.first_empty());
            let counts = representation_counts(&b);
            for x in 0..b.codewords() as u32 {
                prop_assert_eq!(counts[x as usize] as usize, idx.count(x));
            }
        }

        #[test]
        fn duplicate_weight_keeps_completeness(n in 2u32..=6, extra in 1u32..32) {
            let b = Basis::binary(n).unwrap();
            let before = enumerate_all(&b).unwrap();
            let mut w = b.weights().to_vec();
            w.push(extra.min((1 << n) - 1));
            let grown = Basis::new(n, w).unwrap();
            let after = enumerate_all(&grown).unwrap();
            prop_assert!(after.is_complete());
            for x in 0..b.codewords() as u32 {
                prop_assert!(after.count(x) >= before.count(x));
            }
        }
    }
}
