use std::path::{Path, PathBuf};

use csdac_core::{metric, AnnealConfig, Error, InputPmf, Result, SimConfig, SimMode};
use serde::{Deserialize, Serialize};

use crate::arch::ArchSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PmfSpec {
    Uniform {},
    /// Clipped Gaussian; `sigma_s` in LSB, or the SQNR-optimal value when
    /// left out.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_s: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSettings {
    pub realizations: usize,
    pub yield_quantile: f64,
    /// Switches to the sampled-waveform cross-check with this many samples
    /// per realization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waveform_samples: Option<usize>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings { realizations: 10_000, yield_quantile: 0.95, waveform_samples: None }
    }
}

/// How mappings are found for architectures given only by a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentSettings {
    pub max_sweeps: usize,
    pub restarts: usize,
}

impl Default for DescentSettings {
    fn default() -> Self {
        DescentSettings { max_sweeps: 1000, restarts: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_bits: u32,
    /// `binary`, `thermometer`, `segmented:M`, `table1:L`, `basis:PATH` or
    /// `optimize:L`.
    pub architectures: Vec<String>,
    pub seed: u64,
    pub sigma_delta: f64,
    pub out: PathBuf,
    pub pmf: PmfSpec,
    pub simulation: SimulationSettings,
    pub descent: DescentSettings,
    pub anneal: AnnealConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut architectures = vec!["binary".to_string(), "thermometer".to_string()];
        architectures.extend((2..=4).map(|m| format!("segmented:{m}")));
        architectures.extend((9..=13).map(|l| format!("table1:{l}")));
        ExperimentConfig {
            n_bits: 8,
            architectures,
            seed: 1,
            sigma_delta: csdac_core::DEFAULT_SIGMA_DELTA,
            out: PathBuf::from("out"),
            pmf: PmfSpec::Gaussian { sigma_s: None },
            simulation: SimulationSettings::default(),
            descent: DescentSettings::default(),
            anneal: AnnealConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub realizations: Option<usize>,
    pub sigma_delta: Option<f64>,
    pub quantile: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        cfg.apply(overrides);
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::Parse { line, msg: e.message().to_string() }
        })
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(r) = o.realizations {
            self.simulation.realizations = r;
        }
        if let Some(s) = o.sigma_delta {
            self.sigma_delta = s;
        }
        if let Some(q) = o.quantile {
            self.simulation.yield_quantile = q;
        }
    }

    /// Fills derived values so that the echoed config reproduces the run.
    fn resolve(&mut self) -> Result<()> {
        if self.n_bits == 0 || self.n_bits > csdac_core::MAX_BITS {
            return Err(Error::Config(format!("n_bits must lie in 1..={}", csdac_core::MAX_BITS)));
        }
        if !(self.sigma_delta >= 0.0 && self.sigma_delta.is_finite()) {
            return Err(Error::Config(format!("sigma_delta must be non-negative, got {}", self.sigma_delta)));
        }
        if self.descent.max_sweeps == 0 || self.descent.restarts == 0 {
            return Err(Error::Config("descent max_sweeps and restarts must be positive".into()));
        }
        if let PmfSpec::Gaussian { sigma_s: sigma_s @ None } = &mut self.pmf {
            *sigma_s = Some(metric::optimal_rms(self.n_bits));
        }
        self.anneal.seed = self.seed;
        for a in &self.architectures {
            ArchSpec::parse(a)?;
        }
        Ok(())
    }

    pub fn input_pmf(&self) -> Result<InputPmf> {
        match self.pmf {
            PmfSpec::Uniform {} => InputPmf::uniform(self.n_bits),
            PmfSpec::Gaussian { sigma_s } => {
                InputPmf::gaussian(self.n_bits, sigma_s.unwrap_or_else(|| metric::optimal_rms(self.n_bits)))
            }
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            realizations: self.simulation.realizations,
            sigma_delta: self.sigma_delta,
            yield_quantile: self.simulation.yield_quantile,
            seed: self.seed,
            mode: match self.simulation.waveform_samples {
                Some(samples_per_realization) => SimMode::SampledWaveform { samples_per_realization },
                None => SimMode::ExactExpectation,
            },
        }
    }

    pub fn architectures(&self) -> Result<Vec<ArchSpec>> {
        self.architectures.iter().map(|a| ArchSpec::parse(a)).collect()
    }

    /// The resolved config as TOML, for echoing into artifacts.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Provenance block: a title line followed by the resolved config.
    pub fn provenance(&self, command: &str) -> Vec<String> {
        let mut lines = vec![format!("csdac {} {command}", env!("CARGO_PKG_VERSION"))];
        lines.extend(self.to_toml().lines().map(str::to_string));
        lines
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_and_round_trip() {
        let cfg = ExperimentConfig::load(None, &Overrides::default()).unwrap();
        assert_eq!(cfg.pmf, PmfSpec::Gaussian { sigma_s: Some(metric::optimal_rms(8)) });
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_line() {
        let err = ExperimentConfig::parse("n_bits = 8\nseeds = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: Some(2), .. }), "{err}");
        assert!(ExperimentConfig::parse("[simulation]\nrealisations = 3\n").is_err());
        assert!(ExperimentConfig::parse("[pmf]\nkind = \"uniform\"\nsigma_s = 3.0\n").is_err());
        assert_eq!(ExperimentConfig::parse("[pmf]\nkind = \"uniform\"\n").unwrap().pmf, PmfSpec::Uniform {});
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { seed: Some(9), realizations: Some(5), quantile: Some(0.9), ..Default::default() };
        let cfg = ExperimentConfig::load(None, &o).unwrap();
        assert_eq!((cfg.seed, cfg.anneal.seed), (9, 9));
        assert_eq!(cfg.sim_config().realizations, 5);
        assert_eq!(cfg.sim_config().yield_quantile, 0.9);
    }

    #[test]
    fn bad_architecture_is_a_config_error() {
        let o = Overrides::default();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "architectures = [\"segmented:x\"]\n").unwrap();
        assert!(matches!(ExperimentConfig::load(Some(&p), &o), Err(Error::Config(_))));
    }
}
