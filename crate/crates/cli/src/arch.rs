use std::fmt;
use std::path::PathBuf;

use csdac_core::optimizer::descend_multistart;
use csdac_core::{
    anneal_basis, enumerate_all, io, reference, ArchitectureKind, Basis, DescentConfig, Error, InputPmf,
    OptimizationTrace, RepresentationTable, Result, SegmentSpec,
};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum ArchSpec {
    Binary,
    Thermometer,
    Segmented(u32),
    /// Published basis of the given length.
    Table1(usize),
    BasisFile(PathBuf),
    Optimize(usize),
}

impl ArchSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown architecture {s:?}"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let int = |a: Option<&str>| a.and_then(|a| a.parse::<usize>().ok()).ok_or_else(bad);
        Ok(match head {
            "binary" if arg.is_none() => ArchSpec::Binary,
            "thermometer" if arg.is_none() => ArchSpec::Thermometer,
            "segmented" => ArchSpec::Segmented(int(arg)? as u32),
            "table1" => ArchSpec::Table1(int(arg)?),
            "optimize" => ArchSpec::Optimize(int(arg)?),
            "basis" => ArchSpec::BasisFile(PathBuf::from(arg.filter(|a| !a.is_empty()).ok_or_else(bad)?)),
            _ => return Err(bad()),
        })
    }

    /// File-name friendly label.
    pub fn name(&self) -> String {
        match self {
            ArchSpec::Binary => "binary".into(),
            ArchSpec::Thermometer => "thermometer".into(),
            ArchSpec::Segmented(m) => format!("segmented-{m}"),
            ArchSpec::Table1(l) => format!("table1-{l}"),
            ArchSpec::BasisFile(p) => {
                format!("basis-{}", p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            }
            ArchSpec::Optimize(l) => format!("optimize-{l}"),
        }
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingSource {
    Canonical,
    Descended,
    Annealed,
}

impl MappingSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingSource::Canonical => "canonical",
            MappingSource::Descended => "descended",
            MappingSource::Annealed => "annealed",
        }
    }
}

pub struct Built {
    pub spec: ArchSpec,
    pub basis: Basis,
    pub mapping: RepresentationTable,
    pub source: MappingSource,
    pub trace: Option<OptimizationTrace>,
}

impl Built {
    pub fn name(&self) -> String {
        self.spec.name()
    }
}

pub fn spec_basis(spec: &ArchSpec, n_bits: u32) -> Result<Basis> {
    match spec {
        ArchSpec::Binary => Basis::binary(n_bits),
        ArchSpec::Thermometer => Basis::thermometer(n_bits),
        ArchSpec::Segmented(m) => Basis::segmented(SegmentSpec::new(*m, n_bits)?, n_bits),
        ArchSpec::Table1(l) => {
            if n_bits != reference::PUBLISHED_BITS {
                return Err(Error::Config(format!("table1 bases are {}-bit", reference::PUBLISHED_BITS)));
            }
            reference::published_basis(*l)
                .ok_or_else(|| Error::Config(format!("no published basis of length {l} (have 9..=13)")))
        }
        ArchSpec::BasisFile(p) => {
            let b = io::read_basis(p)?;
            if b.n_bits() != n_bits {
                return Err(Error::Config(format!("{} is a {}-bit basis, config says {n_bits}", p.display(), b.n_bits())));
            }
            Ok(b)
        }
        ArchSpec::Optimize(_) => Err(Error::Config("optimize architectures have no fixed basis".into())),
    }
}

/// Best mapping of `basis` over the configured number of descent restarts.
pub fn descend(basis: &Basis, pmf: &InputPmf, cfg: &ExperimentConfig) -> Result<(RepresentationTable, OptimizationTrace)> {
    let index = enumerate_all(basis)?;
    if let Some(missing) = index.first_empty() {
        return Err(Error::Incomplete { missing });
    }
    let dc = DescentConfig { max_sweeps: cfg.descent.max_sweeps, seed: cfg.seed };
    descend_multistart(&index, basis, pmf, &dc, cfg.descent.restarts)
}

/// Basis and mapping of one architecture. Fixed structures keep their
/// canonical mapping; bases from the table or a file are descended.
pub fn build(spec: &ArchSpec, pmf: &InputPmf, cfg: &ExperimentConfig) -> Result<Built> {
    if let ArchSpec::Optimize(l) = spec {
        let out = anneal_basis(cfg.n_bits, *l, pmf, &cfg.anneal)?;
        return Ok(Built {
            spec: spec.clone(),
            basis: out.basis,
            mapping: out.mapping,
            source: MappingSource::Annealed,
            trace: Some(out.trace),
        });
    }
    let basis = spec_basis(spec, cfg.n_bits)?;
    let kind = match spec {
        ArchSpec::Binary => Some(ArchitectureKind::Binary),
        ArchSpec::Thermometer => Some(ArchitectureKind::Thermometer),
        ArchSpec::Segmented(m) => Some(ArchitectureKind::Segmented(SegmentSpec::new(*m, cfg.n_bits)?)),
        _ => None,
    };
    match kind {
        Some(k) => Ok(Built {
            spec: spec.clone(),
            mapping: k.canonical_mapping(&basis)?,
            basis,
            source: MappingSource::Canonical,
            trace: None,
        }),
        None => {
            let (mapping, trace) = descend(&basis, pmf, cfg)?;
            Ok(Built { spec: spec.clone(), basis, mapping, source: MappingSource::Descended, trace: Some(trace) })
        }
    }
}
