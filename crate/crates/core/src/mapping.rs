//! The static codeword-to-switch lookup table.

use crate::basis::{Basis, SelectionVector};
use crate::error::{Error, Result};

/// One selection vector per codeword; row `x` decodes to `x` under the basis
/// the table was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentationTable {
    rows: Vec<SelectionVector>,
    switches: usize,
}

impl RepresentationTable {
    /// Validates row count, row width and decoding against `basis`.
    pub fn new(basis: &Basis, rows: Vec<SelectionVector>) -> Result<Self> {
        let table = RepresentationTable { rows, switches: basis.len() };
        table.validate(basis)?;
        Ok(table)
    }

    /// Table from packed masks (bit `i` = switch `i`).
    pub fn from_masks(basis: &Basis, masks: &[u32]) -> Result<Self> {
        let rows = masks.iter().map(|&m| SelectionVector::from_mask(u64::from(m), basis.len())).collect();
        Self::new(basis, rows)
    }

    pub fn validate(&self, basis: &Basis) -> Result<()> {
        if self.rows.len() != basis.codewords() {
            return Err(Error::Dimension { expected: basis.codewords(), found: self.rows.len() });
        }
        if self.switches != basis.len() {
            return Err(Error::Dimension { expected: basis.len(), found: self.switches });
        }
        for (x, row) in self.rows.iter().enumerate() {
            let decoded = row.value(basis)?;
            if decoded != x as u64 {
                return Err(Error::Decode { codeword: x as u32, decoded });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[SelectionVector] {
        &self.rows
    }

    pub fn row(&self, codeword: u32) -> &SelectionVector {
        &self.rows[codeword as usize]
    }

    /// Number of codewords.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn switch_count(&self) -> usize {
        self.switches
    }

    /// Packed rows, if every row fits in 32 bits.
    pub fn to_masks(&self) -> Option<Vec<u32>> {
        if self.switches > 32 {
            return None;
        }
        self.rows.iter().map(|r| r.to_mask().map(|m| m as u32)).collect()
    }

    /// Same table with switch columns reordered: column `k` of the result is
    /// column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.switches {
            return Err(Error::Dimension { expected: self.switches, found: perm.len() });
        }
        let rows = self
            .rows
            .iter()
            .map(|r| SelectionVector::new(perm.iter().map(|&p| r.get(p)).collect()))
            .collect();
        Ok(RepresentationTable { rows, switches: self.switches })
    }
}
