//! Mapping search (coordinate descent) and basis search (simulated
//! annealing around it).

mod anneal;
mod descent;

use serde::Serialize;

pub use anneal::{anneal_basis, AnnealConfig, AnnealOutcome};
pub use descent::{descend_from_table, descend_multistart, descend_representations, DescentConfig, OptimizationTrace};

use crate::basis::Basis;
use crate::error::Result;
use crate::mapping::RepresentationTable;
use crate::metric::{mismatch_mse, InputPmf};

/// Static figures of one architecture; no simulation involved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArchEvaluation {
    pub switches: usize,
    pub raw: f64,
    pub normalized: f64,
    pub mse: f64,
}

pub fn evaluate_architecture(
    basis: &Basis,
    mapping: &RepresentationTable,
    pmf: &InputPmf,
    sigma_delta: f64,
) -> Result<ArchEvaluation> {
    let m = mismatch_mse(mapping, basis, pmf, sigma_delta)?;
    Ok(ArchEvaluation { switches: basis.len(), raw: m.raw, normalized: m.normalized, mse: m.mse })
}
