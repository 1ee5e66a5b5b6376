//! Published 8-bit optimized bases and the reference mapping excerpt for the
//! 13-switch basis. Used as golden data and as built-in architectures.

use crate::basis::{Basis, SelectionVector};

pub const PUBLISHED_BITS: u32 = 8;

/// Optimized bases for `L = 9..=13` switches, ascending.
pub const PUBLISHED_BASES: [(usize, &[u32]); 5] = [
    (9, &[1, 2, 4, 8, 16, 32, 35, 77, 80]),
    (10, &[1, 2, 4, 8, 16, 17, 32, 33, 70, 72]),
    (11, &[1, 2, 4, 8, 8, 16, 17, 32, 33, 66, 70]),
    (12, &[1, 2, 4, 7, 8, 15, 15, 23, 25, 30, 61, 64]),
    (13, &[1, 2, 4, 6, 8, 9, 12, 16, 17, 25, 32, 61, 66]),
];

/// First codeword of [`PUBLISHED_ROWS`].
pub const PUBLISHED_ROWS_START: u32 = 118;

/// Mapping of codewords 118..=138 under the 13-switch basis, switch 0 leftmost.
pub const PUBLISHED_ROWS: [&str; 21] = [
    "0001011001001", // 118
    "1001011001001",
    "0101011001001",
    "1101011001001",
    "0011011001001",
    "1011011001001",
    "0111011001001",
    "1111011001001",
    "0001001011001", // 126
    "1001001011001",
    "0101001011001",
    "1101001011001",
    "0011001011001",
    "1011001011001",
    "0111001011001",
    "1111001011001",
    "1010011011001", // 134
    "0001011011001",
    "1001011011001",
    "0101011011001",
    "1101011011001", // 138
];

/// Lengths of [`PUBLISHED_BASES`], ascending.
pub fn published_lengths() -> impl Iterator<Item = usize> {
    PUBLISHED_BASES.iter().map(|(l, _)| *l)
}

pub fn published_basis(length: usize) -> Option<Basis> {
    PUBLISHED_BASES
        .iter()
        .find(|(l, _)| *l == length)
        .map(|(_, w)| Basis::new(PUBLISHED_BITS, w.to_vec()).expect("published basis is well formed"))
}

/// `(codeword, selection)` pairs of the published mapping excerpt.
pub fn published_rows() -> Vec<(u32, SelectionVector)> {
    PUBLISHED_ROWS
        .iter()
        .enumerate()
        .map(|(k, s)| {
            (PUBLISHED_ROWS_START + k as u32, SelectionVector::parse_bits(s).expect("published row is binary"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_decode() {
        let b = published_basis(13).unwrap();
        for (x, w) in published_rows() {
            assert_eq!(w.len(), 13);
            assert_eq!(w.value(&b).unwrap(), u64::from(x));
        }
    }

    #[test]
    fn lengths_match() {
        for (l, w) in PUBLISHED_BASES {
            assert_eq!(w.len(), l);
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
        }
        assert!(published_basis(14).is_none());
    }
}
