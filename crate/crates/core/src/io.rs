//! Text file formats: basis (TOML), mapping / pmf / trace (CSV) and the
//! hardware LUT listing.
//!
//! Every writer accepts a list of provenance lines that are emitted first as
//! `# ` comments; every reader skips such lines.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{Basis, SelectionVector};
use crate::error::{Error, Result};
use crate::mapping::RepresentationTable;
use crate::metric::InputPmf;
use crate::optimizer::OptimizationTrace;

pub const MAPPING_HEADER: &str = "codeword,bits,value";
pub const PMF_HEADER: &str = "codeword,probability";
pub const TRACE_HEADER: &str = "step,objective,temperature,mean_drift";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisFile {
    n_bits: u32,
    weights: Vec<u32>,
}

fn comments(out: &mut String, provenance: &[String]) {
    for line in provenance {
        for l in line.lines() {
            let _ = writeln!(out, "# {l}");
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn basis_to_string(basis: &Basis, provenance: &[String]) -> String {
    let mut out = String::new();
    comments(&mut out, provenance);
    let file = BasisFile { n_bits: basis.n_bits(), weights: basis.weights().to_vec() };
    out.push_str(&toml::to_string(&file).expect("basis serializes"));
    out
}

pub fn parse_basis(text: &str) -> Result<Basis> {
    let file: BasisFile = toml::from_str(text)
        .map_err(|e| Error::parse(e.span().map(|s| line_of(text, s.start)), e.message().to_string()))?;
    Basis::new(file.n_bits, file.weights)
}

pub fn read_basis(path: &Path) -> Result<Basis> {
    parse_basis(&std::fs::read_to_string(path)?)
}

pub fn mapping_to_csv(table: &RepresentationTable, basis: &Basis, provenance: &[String]) -> Result<String> {
    table.validate(basis)?;
    let mut out = String::new();
    comments(&mut out, provenance);
    out.push_str(MAPPING_HEADER);
    out.push('\n');
    for (x, row) in table.rows().iter().enumerate() {
        let _ = writeln!(out, "{x},{},{}", row.to_bit_string(), row.value(basis)?);
    }
    Ok(out)
}

/// Reads a mapping CSV and checks it against `basis`: rows must be in
/// codeword order, the `value` column must match the decoded bits, and the
/// table must cover every codeword.
pub fn parse_mapping(text: &str, basis: &Basis) -> Result<RepresentationTable> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != MAPPING_HEADER.split(',').collect::<Vec<_>>() {
        return Err(Error::parse(None, format!("expected header {MAPPING_HEADER:?}")));
    }
    let mut rows = Vec::with_capacity(basis.codewords());
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize);
        let field = |i: usize| record.get(i).ok_or_else(|| Error::parse(line, "missing column"));
        let codeword: u32 = field(0)?.trim().parse().map_err(|e| Error::parse(line, format!("codeword: {e}")))?;
        if codeword as usize != rows.len() {
            return Err(Error::parse(line, format!("expected codeword {}, found {codeword}", rows.len())));
        }
        let bits = SelectionVector::parse_bits(field(1)?.trim()).map_err(|e| Error::parse(line, e.to_string()))?;
        let value: u64 = field(2)?.trim().parse().map_err(|e| Error::parse(line, format!("value: {e}")))?;
        let decoded = bits.value(basis)?;
        if decoded != value || decoded != u64::from(codeword) {
            return Err(Error::Decode { codeword, decoded });
        }
        rows.push(bits);
    }
    RepresentationTable::new(basis, rows)
}

pub fn read_mapping(path: &Path, basis: &Basis) -> Result<RepresentationTable> {
    parse_mapping(&std::fs::read_to_string(path)?, basis)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    Error::parse(line, e.to_string())
}

/// `2^N` lines, one per codeword address, switch 0 leftmost.
pub fn lut_to_string(table: &RepresentationTable, basis: &Basis, provenance: &[String]) -> Result<String> {
    for (x, row) in table.rows().iter().enumerate() {
        let decoded = row.value(basis)?;
        if decoded != x as u64 {
            return Err(Error::Decode { codeword: x as u32, decoded });
        }
    }
    table.validate(basis)?;
    let mut out = String::new();
    comments(&mut out, provenance);
    let _ = writeln!(out, "# basis: {basis}");
    let _ = writeln!(out, "# {} words x {} bits; line k = codeword k; bit 0 (leftmost) = basis index 0", table.len(), basis.len());
    for row in table.rows() {
        out.push_str(&row.to_bit_string());
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_lut(text: &str, basis: &Basis) -> Result<RepresentationTable> {
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .map(|(i, l)| SelectionVector::parse_bits(l.trim()).map_err(|e| Error::parse(Some(i + 1), e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    RepresentationTable::new(basis, rows)
}

pub fn pmf_to_csv(pmf: &InputPmf, provenance: &[String]) -> String {
    let mut out = String::new();
    comments(&mut out, provenance);
    let _ = writeln!(out, "# distribution: {}", pmf.kind());
    out.push_str(PMF_HEADER);
    out.push('\n');
    for (x, p) in pmf.probs().iter().enumerate() {
        let _ = writeln!(out, "{x},{p:e}");
    }
    out
}

pub fn trace_to_csv(trace: &OptimizationTrace, provenance: &[String]) -> String {
    let mut out = String::new();
    comments(&mut out, provenance);
    let _ = writeln!(out, "# accepted={} rejected={} infeasible={}", trace.accepted, trace.rejected, trace.infeasible);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (k, obj) in trace.objective.iter().enumerate() {
        let temp = trace.temperature.get(k).map(|t| format!("{t:e}")).unwrap_or_default();
        // drift is recorded after each sweep, so it lags the objective by one
        let drift = k.checked_sub(1).and_then(|j| trace.mean_drift.get(j)).map(|d| format!("{d:e}")).unwrap_or_default();
        let _ = writeln!(out, "{k},{obj:.15e},{temp},{drift}");
    }
    out
}
