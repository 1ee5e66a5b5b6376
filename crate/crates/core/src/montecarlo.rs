//! Monte Carlo SNDR over fabricated instances.
//!
//! Mismatch is static for a given instance, so the error of every codeword
//! is fixed once the deltas are drawn. The default mode therefore takes the
//! exact expectation over the input distribution instead of simulating a
//! waveform.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{check_len, dac_output, Basis, MismatchRealization};
use crate::error::{Error, Result};
use crate::mapping::RepresentationTable;
use crate::metric::{InputPmf, PmfKind};
use crate::seed;

pub const MIN_WAVEFORM_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimMode {
    ExactExpectation,
    SampledWaveform { samples_per_realization: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub realizations: usize,
    pub sigma_delta: f64,
    /// Fraction of instances that must reach the reported yield SNDR.
    pub yield_quantile: f64,
    pub seed: u64,
    pub mode: SimMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            realizations: 10_000,
            sigma_delta: crate::DEFAULT_SIGMA_DELTA,
            yield_quantile: 0.95,
            seed: 1,
            mode: SimMode::ExactExpectation,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if !(self.sigma_delta > 0.0 && self.sigma_delta.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_delta must be positive (got {}); without mismatch the SNDR is unbounded",
                self.sigma_delta
            )));
        }
        if !(self.yield_quantile > 0.0 && self.yield_quantile < 1.0) {
            return Err(Error::Config(format!("yield quantile {} is outside (0, 1)", self.yield_quantile)));
        }
        if let SimMode::SampledWaveform { samples_per_realization } = self.mode {
            if samples_per_realization < MIN_WAVEFORM_SAMPLES {
                return Err(Error::Config(format!(
                    "sampled mode needs at least {MIN_WAVEFORM_SAMPLES} samples per realization"
                )));
            }
        }
        Ok(())
    }
}

/// Precomputed view of a mapping for fast error-power evaluation.
///
/// Rows are walked in codeword order, applying only the switches that change
/// between consecutive rows, so one instance costs about `2^N` plus the
/// total number of bit flips.
#[derive(Debug, Clone)]
pub struct ErrorModel {
    probs: Vec<f64>,
    first_row: Vec<usize>,
    /// `(switch, +1 | -1)` transitions from row `x - 1` to row `x`.
    steps: Vec<Vec<(usize, f64)>>,
    switches: usize,
    signal_power: f64,
}

impl ErrorModel {
    pub fn new(mapping: &RepresentationTable, basis: &Basis, pmf: &InputPmf) -> Result<Self> {
        mapping.validate(basis)?;
        check_len(mapping.len(), pmf.len())?;
        let rows = mapping.rows();
        let first_row = rows[0].ones().collect();
        let steps = rows
            .windows(2)
            .map(|pair| {
                let (a, b) = (pair[0].bits(), pair[1].bits());
                (0..a.len())
                    .filter(|&i| a[i] != b[i])
                    .map(|i| (i, if b[i] { 1.0 } else { -1.0 }))
                    .collect()
            })
            .collect();
        Ok(ErrorModel {
            probs: pmf.probs().to_vec(),
            first_row,
            steps,
            switches: basis.len(),
            signal_power: pmf.variance(),
        })
    }

    /// `sum_x P(x) (x - E[x])^2`.
    pub fn signal_power(&self) -> f64 {
        self.signal_power
    }

    /// `sum_x P(x) e(x)^2` for one instance. `scratch` is reused between calls.
    pub fn error_power_with(&self, delta: &MismatchRealization, scratch: &mut Vec<f64>) -> Result<f64> {
        check_len(self.switches, delta.len())?;
        let d = delta.deltas();
        scratch.clear();
        let mut y: f64 = self.first_row.iter().map(|&i| d[i]).sum();
        scratch.push(y);
        for step in &self.steps {
            for &(i, s) in step {
                y += s * d[i];
            }
            scratch.push(y);
        }
        let mean: f64 = scratch.iter().zip(&self.probs).map(|(y, p)| y * p).sum();
        Ok(scratch.iter().zip(&self.probs).map(|(y, p)| p * (y - mean).powi(2)).sum())
    }

    pub fn error_power(&self, delta: &MismatchRealization) -> Result<f64> {
        self.error_power_with(delta, &mut Vec::with_capacity(self.probs.len()))
    }

    /// SNDR in dB; `+inf` when the instance has no error.
    pub fn sndr_db(&self, delta: &MismatchRealization) -> Result<f64> {
        Ok(to_db(self.signal_power, self.error_power(delta)?))
    }
}

fn to_db(signal: f64, error: f64) -> f64 {
    if error == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / error).log10()
    }
}

/// Exact-expectation SNDR of one instance: signal variance over
/// `sum_x P(x) e(x)^2`, in dB.
pub fn sndr_one_realization(
    mapping: &RepresentationTable,
    basis: &Basis,
    pmf: &InputPmf,
    delta: &MismatchRealization,
) -> Result<f64> {
    ErrorModel::new(mapping, basis, pmf)?.sndr_db(delta)
}

/// Waveform cross-check: Gaussian samples at std `sigma_s` LSB are rounded
/// and clipped to codewords, converted through the mismatched DAC, and the
/// mean-removed output is compared with the mean-removed codes.
pub fn sampled_waveform_sndr(
    mapping: &RepresentationTable,
    basis: &Basis,
    delta: &MismatchRealization,
    sigma_s: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples < MIN_WAVEFORM_SAMPLES {
        return Err(Error::Config(format!("sampled mode needs at least {MIN_WAVEFORM_SAMPLES} samples")));
    }
    if !(sigma_s > 0.0) {
        return Err(Error::Config("waveform std must be positive".into()));
    }
    mapping.validate(basis)?;
    let outputs: Vec<f64> =
        mapping.rows().iter().map(|w| dac_output(w, basis, delta)).collect::<Result<_>>()?;
    let top = basis.max_codeword() as f64;
    let mid = top / 2.0;
    let mut rng = seed::stream(seed, seed::WAVEFORM, 0);
    let (mut sx, mut sxx, mut sr, mut srr) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_samples {
        let s: f64 = rng.sample::<f64, _>(StandardNormal) * sigma_s;
        let x = (s + mid).round().clamp(0.0, top);
        let r = outputs[x as usize] - x;
        sx += x;
        sxx += x * x;
        sr += r;
        srr += r * r;
    }
    let n = n_samples as f64;
    let signal = sxx / n - (sx / n).powi(2);
    let error = (srr / n - (sr / n).powi(2)).max(0.0);
    Ok(to_db(signal, error))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SndrSummary {
    pub count: usize,
    /// Realizations with finite SNDR; only these enter the means.
    pub finite_count: usize,
    /// Mean of the per-instance dB values.
    pub mean_db: f64,
    /// Mean of the linear SNDR, in dB.
    pub linear_mean_db: f64,
    pub yield_quantile: f64,
    /// SNDR reached by at least `yield_quantile` of the instances
    /// (nearest-rank lower quantile).
    pub yield_db: f64,
    pub min_db: f64,
    pub max_db: f64,
    pub signal_power: f64,
    /// Average `sum_x P(x) e(x)^2` over instances.
    pub mean_error_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SndrDistribution {
    pub values: Vec<f64>,
    pub summary: SndrSummary,
}

impl SndrDistribution {
    pub fn from_values(values: Vec<f64>, yield_quantile: f64, signal_power: f64, mean_error_power: f64) -> Self {
        let summary = summarize(&values, yield_quantile, signal_power, mean_error_power);
        SndrDistribution { values, summary }
    }
}

/// Nearest-rank value exceeded by a `q` fraction of `values`.
pub fn yield_value(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (((1.0 - q) * sorted.len() as f64 - 1e-9).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn summarize(values: &[f64], q: f64, signal_power: f64, mean_error_power: f64) -> SndrSummary {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < values.len() {
        warn!("{} of {} realizations had zero error and are excluded from the means", values.len() - finite.len(), values.len());
    }
    let nf = finite.len().max(1) as f64;
    let mean_db = finite.iter().sum::<f64>() / nf;
    let linear = finite.iter().map(|v| 10f64.powf(v / 10.0)).sum::<f64>() / nf;
    let fold = |init: f64, f: fn(f64, f64) -> f64| values.iter().copied().fold(init, f);
    SndrSummary {
        count: values.len(),
        finite_count: finite.len(),
        mean_db,
        linear_mean_db: 10.0 * linear.log10(),
        yield_quantile: q,
        yield_db: yield_value(values, q),
        min_db: fold(f64::INFINITY, f64::min),
        max_db: fold(f64::NEG_INFINITY, f64::max),
        signal_power,
        mean_error_power,
    }
}

/// SNDR of `cfg.realizations` independent instances. Instance `j` draws its
/// mismatch from its own stream, so results do not depend on thread count.
pub fn run_simulation(
    mapping: &RepresentationTable,
    basis: &Basis,
    pmf: &InputPmf,
    cfg: &SimConfig,
) -> Result<SndrDistribution> {
    cfg.validate()?;
    let model = ErrorModel::new(mapping, basis, pmf)?;
    let signal = model.signal_power();
    let per: Vec<(f64, f64)> = match cfg.mode {
        SimMode::ExactExpectation => (0..cfg.realizations)
            .into_par_iter()
            .map_init(
                || Vec::with_capacity(pmf.len()),
                |scratch, j| {
                    let mut rng = seed::stream(cfg.seed, seed::REALIZATION, j as u64);
                    let delta = MismatchRealization::sample(basis, cfg.sigma_delta, &mut rng);
                    let d = model.error_power_with(&delta, scratch)?;
                    Ok((to_db(signal, d), d))
                },
            )
            .collect::<Result<_>>()?,
        SimMode::SampledWaveform { samples_per_realization } => {
            let PmfKind::ClippedGaussian { sigma_s } = pmf.kind() else {
                return Err(Error::Config("sampled-waveform mode needs a Gaussian input".into()));
            };
            (0..cfg.realizations)
                .into_par_iter()
                .map(|j| {
                    let mut rng = seed::stream(cfg.seed, seed::REALIZATION, j as u64);
                    let delta = MismatchRealization::sample(basis, cfg.sigma_delta, &mut rng);
                    let wave_seed = seed::child_seed(cfg.seed, seed::WAVEFORM, j as u64);
                    let db = sampled_waveform_sndr(mapping, basis, &delta, sigma_s, samples_per_realization, wave_seed)?;
                    Ok((db, signal * 10f64.powf(-db / 10.0)))
                })
                .collect::<Result<_>>()?
        }
    };
    let mean_error_power = per.iter().map(|p| p.1).sum::<f64>() / per.len() as f64;
    let values = per.into_iter().map(|p| p.0).collect();
    Ok(SndrDistribution::from_values(values, cfg.yield_quantile, signal, mean_error_power))
}
