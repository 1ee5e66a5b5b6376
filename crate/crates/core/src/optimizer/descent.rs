//! Coordinate descent over per-codeword representations.

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::mapping::RepresentationTable;
use crate::metric::InputPmf;
use crate::repset::RepresentationIndex;
use crate::seed;

/// Improvements smaller than this (relative to the objective scale) are
/// treated as ties so accumulated rounding cannot make a sweep uphill.
const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig { max_sweeps: 100, seed: 1 }
    }
}

/// Objective history and move counts of one optimization run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OptimizationTrace {
    /// Objective at the start, then after every sweep (descent) or every
    /// temperature step (annealing).
    pub objective: Vec<f64>,
    pub accepted: u64,
    pub rejected: u64,
    /// Annealing proposals that failed the completeness check.
    pub infeasible: u64,
    /// Largest gap between incrementally tracked and recomputed activation
    /// means, per sweep.
    pub mean_drift: Vec<f64>,
    /// Annealing temperature per step; empty for descent.
    pub temperature: Vec<f64>,
}

impl OptimizationTrace {
    pub fn final_objective(&self) -> Option<f64> {
        self.objective.last().copied()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Descent state on packed masks; also used as the inner loop of annealing.
pub(crate) struct MaskDescent<'a> {
    index: &'a RepresentationIndex,
    weights: Vec<f64>,
    probs: &'a [f64],
    rows: Vec<u32>,
    means: Vec<f64>,
}

impl<'a> MaskDescent<'a> {
    pub(crate) fn new(index: &'a RepresentationIndex, basis: &Basis, pmf: &'a InputPmf, rows: Vec<u32>) -> Self {
        let weights = basis.weights().iter().map(|&w| f64::from(w)).collect();
        let means = compute_means(&rows, pmf.probs(), index.switches());
        MaskDescent { index, weights, probs: pmf.probs(), rows, means }
    }

    pub(crate) fn objective(&self) -> f64 {
        self.means.iter().zip(&self.weights).map(|(&p, &w)| p * (1.0 - p) * w).sum()
    }

    pub(crate) fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub(crate) fn into_rows(self) -> Vec<u32> {
        self.rows
    }

    /// Change in objective if row `y` (probability `p`) switches from
    /// `from` to `to`.
    fn delta(&self, from: u32, to: u32, p: f64) -> f64 {
        let mut d = 0.0;
        let mut off = from & !to;
        while off != 0 {
            let i = off.trailing_zeros() as usize;
            off &= off - 1;
            let m = self.means[i];
            // f(m - p) - f(m) with f(m) = m(1 - m)
            d += self.weights[i] * (-p * (1.0 - 2.0 * m) - p * p);
        }
        let mut on = to & !from;
        while on != 0 {
            let i = on.trailing_zeros() as usize;
            on &= on - 1;
            let m = self.means[i];
            d += self.weights[i] * (p * (1.0 - 2.0 * m) - p * p);
        }
        d
    }

    fn apply(&mut self, y: usize, to: u32) {
        let from = self.rows[y];
        let p = self.probs[y];
        let mut off = from & !to;
        while off != 0 {
            let i = off.trailing_zeros() as usize;
            off &= off - 1;
            self.means[i] -= p;
        }
        let mut on = to & !from;
        while on != 0 {
            let i = on.trailing_zeros() as usize;
            on &= on - 1;
            self.means[i] += p;
        }
        self.rows[y] = to;
    }

    /// One pass over all codewords in ascending order. Returns the number
    /// of rows that changed.
    fn sweep(&mut self, scale: f64) -> u64 {
        let mut changed = 0;
        for y in 0..self.rows.len() {
            let p = self.probs[y];
            if p == 0.0 {
                continue;
            }
            let incumbent = self.rows[y];
            let mut best = incumbent;
            let mut best_delta = -IMPROVEMENT_EPS * scale;
            for &cand in self.index.members(y as u32) {
                if cand == incumbent {
                    continue;
                }
                let d = self.delta(incumbent, cand, p);
                // members are ascending, so strict < keeps the lowest mask on ties
                if d < best_delta {
                    best_delta = d;
                    best = cand;
                }
            }
            if best != incumbent {
                self.apply(y, best);
                changed += 1;
            }
        }
        changed
    }

    /// Recompute the activation means from scratch; returns the largest
    /// correction applied.
    fn resync(&mut self) -> f64 {
        let fresh = compute_means(&self.rows, self.probs, self.index.switches());
        let drift = fresh.iter().zip(&self.means).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        self.means = fresh;
        drift
    }

    /// Sweep until a pass changes nothing or `max_sweeps` is reached.
    pub(crate) fn run(&mut self, max_sweeps: usize, trace: &mut OptimizationTrace) {
        let scale = self.weights.iter().sum::<f64>().max(1.0);
        trace.objective.push(self.objective());
        for _ in 0..max_sweeps {
            let changed = self.sweep(scale);
            trace.accepted += changed;
            trace.rejected += self.rows.len() as u64 - changed;
            trace.mean_drift.push(self.resync());
            trace.objective.push(self.objective());
            if changed == 0 {
                break;
            }
        }
    }
}

pub(crate) fn compute_means(rows: &[u32], probs: &[f64], switches: usize) -> Vec<f64> {
    let mut means = vec![0.0; switches];
    for (&r, &p) in rows.iter().zip(probs) {
        let mut m = r;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            means[i] += p;
        }
    }
    means
}

pub(crate) fn random_rows<R: rand::Rng + ?Sized>(index: &RepresentationIndex, rng: &mut R) -> Result<Vec<u32>> {
    (0..index.codewords() as u32)
        .map(|x| {
            let members = index.members(x);
            if members.is_empty() {
                return Err(Error::Invariant(format!("codeword {x} has no representation")));
            }
            Ok(members[rng.random_range(0..members.len())])
        })
        .collect()
}

fn check_inputs(index: &RepresentationIndex, basis: &Basis, pmf: &InputPmf) -> Result<()> {
    if index.switches() != basis.len() || index.codewords() != basis.codewords() {
        return Err(Error::Dimension { expected: basis.len(), found: index.switches() });
    }
    if pmf.len() != basis.codewords() {
        return Err(Error::Dimension { expected: basis.codewords(), found: pmf.len() });
    }
    if let Some(missing) = index.first_empty() {
        return Err(Error::Incomplete { missing });
    }
    Ok(())
}

/// Coordinate descent over representations.
///
/// Rows start at a random member of `R(x)`; each sweep visits codewords in
/// ascending order and replaces row `y` by the member of `R(y)` that most
/// lowers the metric with every other row held fixed. The incumbent is kept
/// on ties, otherwise the lowest mask wins.
pub fn descend_representations(
    index: &RepresentationIndex,
    basis: &Basis,
    pmf: &InputPmf,
    cfg: &DescentConfig,
) -> Result<(RepresentationTable, OptimizationTrace)> {
    check_inputs(index, basis, pmf)?;
    let mut rng = seed::stream(cfg.seed, seed::DESCENT_INIT, 0);
    let rows = random_rows(index, &mut rng)?;
    descend_from(index, basis, pmf, rows, cfg.max_sweeps)
}

/// Coordinate descent started from the given rows.
pub fn descend_from_table(
    index: &RepresentationIndex,
    basis: &Basis,
    pmf: &InputPmf,
    start: &RepresentationTable,
    max_sweeps: usize,
) -> Result<(RepresentationTable, OptimizationTrace)> {
    check_inputs(index, basis, pmf)?;
    start.validate(basis)?;
    let rows = start.to_masks().ok_or(Error::Capacity { length: basis.len(), limit: 32 })?;
    descend_from(index, basis, pmf, rows, max_sweeps)
}

fn descend_from(
    index: &RepresentationIndex,
    basis: &Basis,
    pmf: &InputPmf,
    rows: Vec<u32>,
    max_sweeps: usize,
) -> Result<(RepresentationTable, OptimizationTrace)> {
    if max_sweeps == 0 {
        return Err(Error::Config("max_sweeps must be at least 1".into()));
    }
    let mut state = MaskDescent::new(index, basis, pmf, rows);
    let mut trace = OptimizationTrace::default();
    state.run(max_sweeps, &mut trace);
    let table = RepresentationTable::from_masks(basis, state.rows())
        .map_err(|e| Error::Invariant(format!("descent produced an invalid row: {e}")))?;
    Ok((table, trace))
}

/// Best of `restarts` descents from independent random starts; ties go to
/// the lower restart index.
pub fn descend_multistart(
    index: &RepresentationIndex,
    basis: &Basis,
    pmf: &InputPmf,
    cfg: &DescentConfig,
    restarts: usize,
) -> Result<(RepresentationTable, OptimizationTrace)> {
    let mut best: Option<(RepresentationTable, OptimizationTrace)> = None;
    for r in 0..restarts.max(1) {
        let run_cfg = DescentConfig { seed: seed::child_seed(cfg.seed, seed::DESCENT_INIT, r as u64), ..*cfg };
        let (table, trace) = descend_representations(index, basis, pmf, &run_cfg)?;
        let better = match &best {
            None => true,
            Some((_, t)) => trace.final_objective() < t.final_objective(),
        };
        if better {
            best = Some((table, trace));
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ArchitectureKind;
    use crate::metric::{mismatch_mse, raw_from_means};
    use crate::reference;
    use crate::repset::enumerate_all;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows_objective(rows: &[u32], basis: &Basis, pmf: &InputPmf) -> f64 {
        raw_from_means(&compute_means(rows, pmf.probs(), basis.len()), basis.weights())
    }

    /// Exhaustive minimum over the product of all representation sets.
    fn brute_force_optimum(index: &RepresentationIndex, basis: &Basis, pmf: &InputPmf) -> f64 {
        fn go(x: usize, rows: &mut Vec<u32>, index: &RepresentationIndex, basis: &Basis, pmf: &InputPmf) -> f64 {
            if x == index.codewords() {
                return rows_objective(rows, basis, pmf);
            }
            let mut best = f64::INFINITY;
            for &m in index.members(x as u32) {
                rows.push(m);
                best = best.min(go(x + 1, rows, index, basis, pmf));
                rows.pop();
            }
            best
        }
        go(0, &mut Vec::new(), index, basis, pmf)
    }

    #[test]
    fn binary_has_nothing_to_descend() {
        let b = Basis::binary(6).unwrap();
        let idx = enumerate_all(&b).unwrap();
        let pmf = InputPmf::gaussian(6, 10.0).unwrap();
        let canonical = ArchitectureKind::Binary.canonical_mapping(&b).unwrap();
        for seed in 0..3 {
            let (t, trace) =
                descend_representations(&idx, &b, &pmf, &DescentConfig { max_sweeps: 10, seed }).unwrap();
            assert_eq!(t, canonical);
            assert_eq!(trace.objective.len(), 2);
        }
    }

    #[test]
    fn small_instance_reaches_global_optimum() {
        let b = Basis::new(3, vec![1, 1, 2, 4]).unwrap();
        let idx = enumerate_all(&b).unwrap();
        let pmf = InputPmf::uniform(3).unwrap();
        let optimum = brute_force_optimum(&idx, &b, &pmf);
        let (t, _) = descend_multistart(&idx, &b, &pmf, &DescentConfig { max_sweeps: 50, seed: 3 }, 20).unwrap();
        let got = mismatch_mse(&t, &b, &pmf, 1.0).unwrap().raw;
        assert_eq!(got, optimum);
    }

    #[test]
    fn published_basis_descends() {
        let b = reference::published_basis(13).unwrap();
        let idx = enumerate_all(&b).unwrap();
        let pmf = InputPmf::gaussian(8, 37.0).unwrap();
        let (t, trace) = descend_representations(&idx, &b, &pmf, &DescentConfig::default()).unwrap();
        t.validate(&b).unwrap();
        assert!(trace.is_non_increasing());
        assert!(trace.final_objective().unwrap() < trace.objective[0]);
        let recomputed = mismatch_mse(&t, &b, &pmf, 1.0).unwrap().raw;
        assert!((recomputed - trace.final_objective().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let b = reference::published_basis(11).unwrap();
        let idx = enumerate_all(&b).unwrap();
        let pmf = InputPmf::gaussian(8, 37.0).unwrap();
        let cfg = DescentConfig { max_sweeps: 20, seed: 42 };
        let a = descend_representations(&idx, &b, &pmf, &cfg).unwrap();
        let c = descend_representations(&idx, &b, &pmf, &cfg).unwrap();
        assert_eq!(a.0, c.0);
        assert_eq!(a.1, c.1);
    }

    #[test]
    fn rejects_incomplete_basis() {
        let b = Basis::new(3, vec![2, 4, 1, 1]).unwrap();
        let idx = enumerate_all(&b).unwrap();
        assert!(descend_representations(&idx, &b, &InputPmf::uniform(3).unwrap(), &DescentConfig::default()).is_ok());
        let b = Basis::new(3, vec![2, 4]).unwrap();
        let idx = enumerate_all(&b).unwrap();
        assert!(matches!(
            descend_representations(&idx, &b, &InputPmf::uniform(3).unwrap(), &DescentConfig::default()),
            Err(Error::Incomplete { missing: 1 })
        ));
    }

    fn random_instance(seed: u64) -> (Basis, InputPmf) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6u32);
        let mut w: Vec<u32> = (0..n).map(|i| 1 << i).collect();
        for _ in 0..rng.random_range(0..=5) {
            w.push(rng.random_range(1..(1u32 << n)));
        }
        let probs: Vec<f64> = (0..1 << n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = probs.iter().sum();
        let pmf = InputPmf::custom(probs.into_iter().map(|p| p / total).collect()).unwrap();
        (Basis::new(n, w).unwrap(), pmf)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn descent_invariants(inst in 0u64..10_000, seed in 0u64..1000) {
            let (b, pmf) = random_instance(inst);
            let idx = enumerate_all(&b).unwrap();
            let (t, trace) = descend_representations(&idx, &b, &pmf, &DescentConfig { max_sweeps: 50, seed }).unwrap();
            prop_assert!(trace.is_non_increasing());
            prop_assert!(trace.mean_drift.iter().all(|&d| d <= 1e-9));
            prop_assert!(t.validate(&b).is_ok());
        }
    }
}
