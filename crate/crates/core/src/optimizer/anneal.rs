//! Simulated annealing over complete bases of a fixed length.
//!
//! The energy of a candidate basis is the metric reached by a budgeted
//! coordinate descent over its representations. The descent starts from the
//! chain's current mapping, carried over to the candidate wherever a row
//! still decodes, so the chain refines one mapping as it moves between
//! bases. Every chain owns its generator.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descent::{MaskDescent, OptimizationTrace};
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::mapping::RepresentationTable;
use crate::metric::InputPmf;
use crate::repset::{enumerate_all, is_complete, MAX_ENUM_SWITCHES};
use crate::seed::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealConfig {
    /// Independent chains; the best result over all of them is returned.
    pub restarts: usize,
    /// Starting temperature; calibrated from the first chain state when unset.
    pub initial_temperature: Option<f64>,
    /// Fraction of uphill moves the calibrated starting temperature accepts.
    pub target_uphill_acceptance: f64,
    /// Feasible moves sampled for calibration.
    pub calibration_moves: usize,
    pub cooling_factor: f64,
    pub steps_per_temperature: usize,
    /// Annealing stops once the temperature falls below this fraction of
    /// the starting temperature.
    pub min_temperature_ratio: f64,
    /// Sweep budget of the descent that scores each candidate.
    pub inner_sweeps: usize,
    /// Sweep budget for the final re-polish of the winner.
    pub polish_sweeps: usize,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            restarts: 100,
            initial_temperature: None,
            target_uphill_acceptance: 0.8,
            calibration_moves: 32,
            cooling_factor: 0.95,
            steps_per_temperature: 50,
            min_temperature_ratio: 1e-4,
            inner_sweeps: 10,
            polish_sweeps: 1000,
            seed: 1,
        }
    }
}

impl AnnealConfig {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("anneal: {what}")));
        if self.restarts == 0 || self.steps_per_temperature == 0 || self.calibration_moves == 0 {
            return bad("restarts, steps_per_temperature and calibration_moves must be positive");
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return bad("cooling_factor must lie in (0, 1)");
        }
        if !(self.min_temperature_ratio > 0.0 && self.min_temperature_ratio < 1.0) {
            return bad("min_temperature_ratio must lie in (0, 1)");
        }
        if !(self.target_uphill_acceptance > 0.0 && self.target_uphill_acceptance < 1.0) {
            return bad("target_uphill_acceptance must lie in (0, 1)");
        }
        if matches!(self.initial_temperature, Some(t) if !(t > 0.0)) {
            return bad("initial_temperature must be positive");
        }
        if self.inner_sweeps == 0 || self.polish_sweeps == 0 {
            return bad("descent sweep budgets must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    /// Winning basis, ascending.
    pub basis: Basis,
    pub mapping: RepresentationTable,
    /// Metric of `mapping` after the final polish.
    pub raw: f64,
    /// Trace of the winning chain: best energy per temperature.
    pub trace: OptimizationTrace,
    /// Best budgeted energy reached by each chain.
    pub chain_energies: Vec<f64>,
    pub best_chain: usize,
}

struct ChainResult {
    energy: f64,
    weights: Vec<u32>,
    rows: Vec<u32>,
    trace: OptimizationTrace,
}

/// A candidate basis and the starting rows for its descent.
struct Candidate {
    weights: Vec<u32>,
    rows: Vec<u32>,
}

struct Chain<'a> {
    n_bits: u32,
    pmf: &'a InputPmf,
    cfg: &'a AnnealConfig,
    rng: StreamRng,
    best: Option<(f64, Vec<u32>, Vec<u32>)>,
}

impl<'a> Chain<'a> {
    fn basis(&self, weights: &[u32]) -> Basis {
        Basis::new(self.n_bits, weights.to_vec()).expect("weights stay within [1, 2^N - 1]")
    }

    /// Budgeted descent from the candidate's rows; rows that no longer
    /// decode are redrawn at random first. Returns the energy and the
    /// descended rows.
    fn energy(&mut self, cand: &Candidate) -> Result<(f64, Vec<u32>)> {
        let basis = self.basis(&cand.weights);
        let index = enumerate_all(&basis)?;
        let rows = cand
            .rows
            .iter()
            .enumerate()
            .map(|(x, &m)| {
                let members = index.members(x as u32);
                if members.is_empty() {
                    return Err(Error::Invariant(format!("codeword {x} has no representation")));
                }
                if members.binary_search(&m).is_ok() {
                    Ok(m)
                } else {
                    Ok(members[self.rng.random_range(0..members.len())])
                }
            })
            .collect::<Result<Vec<u32>>>()?;
        let mut descent = MaskDescent::new(&index, &basis, self.pmf, rows);
        let mut scratch = OptimizationTrace::default();
        descent.run(self.cfg.inner_sweeps, &mut scratch);
        let e = descent.objective();
        let rows = descent.into_rows();
        if self.best.as_ref().is_none_or(|(b, _, _)| e < *b) {
            self.best = Some((e, cand.weights.clone(), rows.clone()));
        }
        Ok((e, rows))
    }

    /// Perturb one weight by a geometric step of random sign. The candidate
    /// is re-sorted and the rows carried over with their columns permuted to
    /// match; rows that used the moved weight are marked invalid (all ones)
    /// and redrawn when scored. `None` if the move is a no-op or breaks
    /// completeness.
    fn propose(&mut self, weights: &[u32], rows: &[u32]) -> Option<Candidate> {
        let top = (1u32 << self.n_bits) - 1;
        let i = self.rng.random_range(0..weights.len());
        let mut step = 1u32;
        while step < top && self.rng.random_bool(0.5) {
            step += 1;
        }
        let old = weights[i];
        let new = if self.rng.random_bool(0.5) { old.saturating_add(step).min(top) } else { old.saturating_sub(step).max(1) };
        if new == old {
            return None;
        }
        let mut tagged: Vec<(u32, usize)> = weights.iter().copied().zip(0..).collect();
        tagged[i].0 = new;
        tagged.sort_by_key(|&(w, _)| w);
        let cand_weights: Vec<u32> = tagged.iter().map(|&(w, _)| w).collect();
        if !is_complete(&self.basis(&cand_weights)) {
            return None;
        }
        let moved = 1u32 << i;
        let rows = rows
            .iter()
            .map(|&m| {
                if m & moved != 0 {
                    return u32::MAX;
                }
                tagged.iter().enumerate().fold(0u32, |acc, (k, &(_, old_k))| acc | (((m >> old_k) & 1) << k))
            })
            .collect();
        Some(Candidate { weights: cand_weights, rows })
    }

    /// Binary weights plus random extras, then scrambled by feasible moves.
    fn initial_state(&mut self, length: usize) -> Vec<u32> {
        let n = self.n_bits;
        let mut w: Vec<u32> = (0..n).map(|i| 1u32 << i).collect();
        while w.len() < length {
            w.push(self.rng.random_range(1..=(1u32 << (n - 1))));
        }
        w.sort_unstable();
        let none = vec![u32::MAX; 1usize << n];
        for _ in 0..4 * length {
            if let Some(c) = self.propose(&w, &none) {
                w = c.weights;
            }
        }
        w
    }

    fn calibrate(&mut self, weights: &[u32], rows: &[u32], e0: f64) -> Result<f64> {
        if let Some(t) = self.cfg.initial_temperature {
            return Ok(t);
        }
        let mut uphill = Vec::new();
        let mut attempts = 0;
        while uphill.len() < self.cfg.calibration_moves && attempts < 20 * self.cfg.calibration_moves {
            attempts += 1;
            if let Some(c) = self.propose(weights, rows) {
                let (e, _) = self.energy(&c)?;
                if e > e0 {
                    uphill.push(e - e0);
                }
            }
        }
        let fallback = (1e-3 * e0).max(1e-9);
        if uphill.is_empty() {
            return Ok(fallback);
        }
        let mean = uphill.iter().sum::<f64>() / uphill.len() as f64;
        Ok((mean / -self.cfg.target_uphill_acceptance.ln()).max(1e-12))
    }

    fn run(mut self, length: usize) -> Result<ChainResult> {
        let weights = self.initial_state(length);
        let start = Candidate { rows: vec![u32::MAX; 1usize << self.n_bits], weights };
        let (mut energy, mut rows) = self.energy(&start)?;
        let mut weights = start.weights;
        let t0 = self.calibrate(&weights, &rows, energy)?;
        let mut trace = OptimizationTrace::default();
        trace.objective.push(self.best.as_ref().map_or(energy, |b| b.0));
        trace.temperature.push(t0);
        let mut t = t0;
        while t >= self.cfg.min_temperature_ratio * t0 {
            for _ in 0..self.cfg.steps_per_temperature {
                let Some(cand) = self.propose(&weights, &rows) else {
                    trace.infeasible += 1;
                    continue;
                };
                let (e, cand_rows) = self.energy(&cand)?;
                let accept = e <= energy || self.rng.random::<f64>() < (-(e - energy) / t).exp();
                if accept {
                    weights = cand.weights;
                    rows = cand_rows;
                    energy = e;
                    trace.accepted += 1;
                } else {
                    trace.rejected += 1;
                }
            }
            t *= self.cfg.cooling_factor;
            trace.objective.push(self.best.as_ref().map_or(energy, |b| b.0));
            trace.temperature.push(t);
        }
        let (energy, weights, rows) = self.best.take().expect("initial state was scored");
        Ok(ChainResult { energy, weights, rows, trace })
    }
}

/// Search for a complete `length`-switch basis minimizing the mismatch
/// metric under `pmf`.
///
/// Runs `cfg.restarts` independent chains (in parallel), keeps the lowest
/// energy with the lower chain index winning ties, and re-polishes the
/// winning mapping with a full-budget descent.
pub fn anneal_basis(n_bits: u32, length: usize, pmf: &InputPmf, cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    cfg.validate()?;
    if pmf.len() != 1usize << n_bits {
        return Err(Error::Dimension { expected: 1usize << n_bits, found: pmf.len() });
    }
    if length < n_bits as usize {
        return Err(Error::Infeasible(format!(
            "{length} switches cannot represent all {} codewords",
            1u64 << n_bits
        )));
    }
    if length > MAX_ENUM_SWITCHES {
        return Err(Error::Capacity { length, limit: MAX_ENUM_SWITCHES });
    }
    let results: Vec<ChainResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|c| {
            let chain = Chain {
                n_bits,
                pmf,
                cfg,
                rng: seed::stream(cfg.seed, seed::ANNEAL_CHAIN, c as u64),
                best: None,
            };
            chain.run(length)
        })
        .collect::<Result<_>>()?;

    let chain_energies: Vec<f64> = results.iter().map(|r| r.energy).collect();
    let best_chain = (0..results.len())
        .min_by(|&a, &b| results[a].energy.total_cmp(&results[b].energy).then(a.cmp(&b)))
        .expect("at least one chain");
    let winner = results.into_iter().nth(best_chain).expect("index in range");

    let basis = Basis::new(n_bits, winner.weights)?;
    if !basis.is_complete() {
        return Err(Error::Invariant(format!("annealing produced incomplete basis {basis}")));
    }
    let index = enumerate_all(&basis)?;
    let mut polish = MaskDescent::new(&index, &basis, pmf, winner.rows);
    let mut scratch = OptimizationTrace::default();
    polish.run(cfg.polish_sweeps, &mut scratch);
    let raw = polish.objective();
    let mapping = RepresentationTable::from_masks(&basis, polish.rows())
        .map_err(|e| Error::Invariant(format!("annealing produced an invalid mapping: {e}")))?;
    Ok(AnnealOutcome { basis, mapping, raw, trace: winner.trace, chain_energies, best_chain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ArchitectureKind;
    use crate::metric::mismatch_mse;

    fn quick(seed: u64) -> AnnealConfig {
        AnnealConfig {
            restarts: 3,
            steps_per_temperature: 10,
            cooling_factor: 0.8,
            min_temperature_ratio: 1e-2,
            seed,
            ..AnnealConfig::default()
        }
    }

    /// Every complete basis of length N is a permutation of the binary one.
    #[test]
    fn square_case_only_admits_binary() {
        let n = 4;
        let mut complete = Vec::new();
        for a in 1..16u32 {
            for b in a..16 {
                for c in b..16 {
                    for d in c..16 {
                        let basis = Basis::new(n, vec![a, b, c, d]).unwrap();
                        if basis.is_complete() {
                            complete.push(basis);
                        }
                    }
                }
            }
        }
        assert_eq!(complete, vec![Basis::binary(n).unwrap()]);

        let pmf = InputPmf::gaussian(n, 3.0).unwrap();
        let out = anneal_basis(n, 4, &pmf, &quick(5)).unwrap();
        assert_eq!(out.basis, Basis::binary(n).unwrap());
        let bin = ArchitectureKind::Binary.canonical_mapping(&out.basis).unwrap();
        assert_eq!(out.raw, mismatch_mse(&bin, &out.basis, &pmf, 1.0).unwrap().raw);
    }

    #[test]
    fn result_is_complete_sorted_and_consistent() {
        let pmf = InputPmf::gaussian(6, 9.0).unwrap();
        let out = anneal_basis(6, 9, &pmf, &quick(2)).unwrap();
        assert!(out.basis.is_complete());
        assert_eq!(out.basis.len(), 9);
        assert!(out.basis.weights().windows(2).all(|w| w[0] <= w[1]));
        out.mapping.validate(&out.basis).unwrap();
        let m = mismatch_mse(&out.mapping, &out.basis, &pmf, 1.0).unwrap();
        assert!((m.raw - out.raw).abs() < 1e-9);
        assert!(out.raw <= out.chain_energies[out.best_chain] + 1e-12);
        assert!(out.trace.is_non_increasing());

        let bin = Basis::binary(6).unwrap();
        let bt = ArchitectureKind::Binary.canonical_mapping(&bin).unwrap();
        assert!(out.raw < mismatch_mse(&bt, &bin, &pmf, 1.0).unwrap().raw);
    }

    #[test]
    fn deterministic_for_seed() {
        let pmf = InputPmf::gaussian(5, 5.0).unwrap();
        let a = anneal_basis(5, 7, &pmf, &quick(9)).unwrap();
        let b = anneal_basis(5, 7, &pmf, &quick(9)).unwrap();
        assert_eq!(a.basis, b.basis);
        assert_eq!(a.mapping, b.mapping);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.chain_energies, b.chain_energies);
    }

    #[test]
    fn rejects_short_and_long() {
        let pmf = InputPmf::uniform(8).unwrap();
        assert!(matches!(anneal_basis(8, 7, &pmf, &quick(1)), Err(Error::Infeasible(_))));
        assert!(matches!(anneal_basis(8, 21, &pmf, &quick(1)), Err(Error::Capacity { .. })));
        let bad = AnnealConfig { cooling_factor: 1.0, ..quick(1) };
        assert!(matches!(anneal_basis(8, 9, &pmf, &bad), Err(Error::Config(_))));
    }
}
