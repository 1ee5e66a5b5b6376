use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use csdac_core::montecarlo::SndrSummary;
use csdac_core::{
    evaluate_architecture, io, reference, run_simulation, Basis, Error, InputPmf, RepresentationTable, Result,
};
use log::info;
use serde::Serialize;

use crate::arch::{build, ArchSpec, Built};
use crate::config::ExperimentConfig;

pub const METRIC_HEADER: &str = "architecture,switches,mapping,raw,normalized,mse";
pub const SUMMARY_HEADER: &str =
    "architecture,switches,raw,normalized,mean_db,linear_mean_db,yield_quantile,yield_db,min_db,max_db";
pub const DISTRIBUTION_HEADER: &str = "realization,sndr_db";

/// One row per architecture: the static figures plus, after simulation, the
/// SNDR statistics.
#[derive(Debug, Clone, Serialize)]
pub struct ArchReport {
    pub architecture: String,
    pub switches: usize,
    pub mapping: &'static str,
    pub raw: f64,
    pub normalized: f64,
    pub mse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sndr: Option<SndrSummary>,
}

fn header(provenance: &[String]) -> String {
    let mut out = String::new();
    for line in provenance {
        let _ = writeln!(out, "# {line}");
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn db(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        format!("{v}")
    }
}

fn report(b: &Built, pmf: &InputPmf, sigma_delta: f64) -> Result<ArchReport> {
    let e = evaluate_architecture(&b.basis, &b.mapping, pmf, sigma_delta)?;
    Ok(ArchReport {
        architecture: b.name(),
        switches: e.switches,
        mapping: b.source.as_str(),
        raw: e.raw,
        normalized: e.normalized,
        mse: e.mse,
        sndr: None,
    })
}

fn metric_row(r: &ArchReport) -> String {
    format!("{},{},{},{:.12},{:.12},{:.12e}\n", r.architecture, r.switches, r.mapping, r.raw, r.normalized, r.mse)
}

fn build_all(cfg: &ExperimentConfig, pmf: &InputPmf) -> Result<Vec<Built>> {
    cfg.architectures()?
        .iter()
        .map(|spec| {
            info!("building {spec}");
            build(spec, pmf, cfg)
        })
        .collect()
}

pub fn metric(cfg: &ExperimentConfig) -> Result<String> {
    let pmf = cfg.input_pmf()?;
    let mut out = header(&cfg.provenance("metric"));
    out.push_str(METRIC_HEADER);
    out.push('\n');
    for b in build_all(cfg, &pmf)? {
        out.push_str(&metric_row(&report(&b, &pmf, cfg.sigma_delta)?));
    }
    write(&cfg.out, "metric.csv", &out)?;
    Ok(out)
}

/// Anneals `optimize:L` entries and descends table and file bases; writes
/// the basis, mapping and (for searched mappings) trace of each.
pub fn optimize(cfg: &ExperimentConfig) -> Result<String> {
    let pmf = cfg.input_pmf()?;
    let prov = cfg.provenance("optimize");
    let mut summary = header(&prov);
    summary.push_str(METRIC_HEADER);
    summary.push('\n');
    for b in build_all(cfg, &pmf)? {
        let name = b.name();
        write(&cfg.out, &format!("{name}.basis.toml"), &io::basis_to_string(&b.basis, &prov))?;
        write(&cfg.out, &format!("{name}.mapping.csv"), &io::mapping_to_csv(&b.mapping, &b.basis, &prov)?)?;
        if let Some(trace) = &b.trace {
            write(&cfg.out, &format!("{name}.trace.csv"), &io::trace_to_csv(trace, &prov))?;
        }
        summary.push_str(&metric_row(&report(&b, &pmf, cfg.sigma_delta)?));
    }
    write(&cfg.out, "optimize.csv", &summary)?;
    Ok(summary)
}

fn summary_row(r: &ArchReport) -> String {
    let s = r.sndr.as_ref().expect("simulated");
    format!(
        "{},{},{:.12},{:.12},{},{},{},{},{},{}\n",
        r.architecture,
        r.switches,
        r.raw,
        r.normalized,
        db(s.mean_db),
        db(s.linear_mean_db),
        s.yield_quantile,
        db(s.yield_db),
        db(s.min_db),
        db(s.max_db)
    )
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    command: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    architectures: &'a [ArchReport],
}

fn simulate_built(cfg: &ExperimentConfig, pmf: &InputPmf, built: &[Built], prov: &[String]) -> Result<Vec<ArchReport>> {
    let sim = cfg.sim_config();
    let mut reports = Vec::new();
    for b in built {
        info!("simulating {}", b.name());
        let dist = run_simulation(&b.mapping, &b.basis, pmf, &sim)?;
        let mut csv = header(prov);
        csv.push_str(DISTRIBUTION_HEADER);
        csv.push('\n');
        for (j, v) in dist.values.iter().enumerate() {
            let _ = writeln!(csv, "{j},{}", db(*v));
        }
        write(&cfg.out, &format!("{}.sndr.csv", b.name()), &csv)?;
        let mut r = report(b, pmf, cfg.sigma_delta)?;
        r.sndr = Some(dist.summary);
        reports.push(r);
    }
    Ok(reports)
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<String> {
    cfg.sim_config().validate()?;
    let pmf = cfg.input_pmf()?;
    let prov = cfg.provenance("simulate");
    let built = build_all(cfg, &pmf)?;
    let reports = simulate_built(cfg, &pmf, &built, &prov)?;
    let mut out = header(&prov);
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in &reports {
        out.push_str(&summary_row(r));
    }
    write(&cfg.out, "summary.csv", &out)?;
    let json = SummaryJson { command: "simulate", seed: cfg.seed, config: cfg, architectures: &reports };
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| Error::Invariant(e.to_string()))?;
    text.push('\n');
    write(&cfg.out, "summary.json", &text)?;
    Ok(out)
}

pub fn export_lut(cfg: &ExperimentConfig, basis_path: &Path, mapping_path: &Path) -> Result<String> {
    let basis = io::read_basis(basis_path)?;
    let mapping = io::read_mapping(mapping_path, &basis)?;
    let prov = vec![
        format!("csdac {} export-lut", env!("CARGO_PKG_VERSION")),
        format!("basis file: {}", basis_path.display()),
        format!("mapping file: {}", mapping_path.display()),
    ];
    let lut = io::lut_to_string(&mapping, &basis, &prov)?;
    write(&cfg.out, "lut.txt", &lut)?;
    Ok(lut)
}

fn curve(spec: &ArchSpec) -> &'static str {
    match spec {
        ArchSpec::Segmented(_) => "segmented",
        _ => "optimized",
    }
}

fn table1_check(pmf: &InputPmf, built: &[Built]) -> Result<String> {
    let mut out = String::from("length,complete,mean_representations,raw,normalized,weights\n");
    let mut all = true;
    for l in reference::published_lengths() {
        let basis = reference::published_basis(l).expect("published");
        let complete = basis.is_complete();
        all &= complete;
        let reps = csdac_core::mean_representation_count(&basis).map(|m| format!("{m:.4}")).unwrap_or("-".into());
        let b = built.iter().find(|b| b.spec == ArchSpec::Table1(l)).expect("published bases are built");
        let e = evaluate_architecture(&b.basis, &b.mapping, pmf, 1.0)?;
        let weights: Vec<String> = basis.weights().iter().map(u32::to_string).collect();
        let _ = writeln!(
            out,
            "{l},{},{reps},{:.12},{:.12},{}",
            if complete { "yes" } else { "no" },
            e.raw,
            e.normalized,
            weights.join(" ")
        );
    }
    let _ = writeln!(out, "# all complete: {}", if all { "yes" } else { "no" });
    Ok(out)
}

fn table2_check(basis: &Basis, ours: &RepresentationTable) -> Result<String> {
    let mut out = String::from("codeword,published_bits,columns,weights,sum,decodes,descended_bits,same\n");
    let mut ok = true;
    for (x, row) in reference::published_rows() {
        let cols: Vec<usize> = row.ones().collect();
        let in_basis = row.len() == basis.len();
        let weights: Vec<String> = cols.iter().map(|&i| basis.weights()[i].to_string()).collect();
        let sum = if in_basis { row.value(basis)? } else { 0 };
        let decodes = in_basis && sum == u64::from(x);
        ok &= decodes;
        let mine = &ours.rows()[x as usize];
        let _ = writeln!(
            out,
            "{x},{},{},{},{sum},{},{},{}",
            row.to_bit_string(),
            cols.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
            weights.join("+"),
            if decodes { "yes" } else { "no" },
            mine.to_bit_string(),
            if mine == &row { "yes" } else { "no" }
        );
    }
    let _ = writeln!(out, "# all rows decode: {}", if ok { "yes" } else { "no" });
    Ok(out)
}

/// Regenerates the published tables and the data behind the figures, at
/// `N = 8`.
pub fn reproduce(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    if cfg.n_bits != reference::PUBLISHED_BITS {
        return Err(Error::Config(format!("reproduce runs at n_bits = {}", reference::PUBLISHED_BITS)));
    }
    cfg.sim_config().validate()?;
    let pmf = cfg.input_pmf()?;
    let prov = cfg.provenance("reproduce");
    let specs: Vec<ArchSpec> =
        reference::published_lengths().map(ArchSpec::Table1).chain((2..=4).map(ArchSpec::Segmented)).collect();
    let built = specs.iter().map(|s| build(s, &pmf, cfg)).collect::<Result<Vec<_>>>()?;
    let reports = simulate_built(cfg, &pmf, &built, &prov)?;

    let mut paths = Vec::new();
    let mut fig2 = header(&prov);
    fig2.push_str("curve,architecture,switches,raw,normalized\n");
    let mut fig3 = header(&prov);
    fig3.push_str("curve,architecture,switches,mean_db,linear_mean_db\n");
    let mut fig4 = header(&prov);
    fig4.push_str("curve,architecture,switches,yield_quantile,yield_db\n");
    for (b, r) in built.iter().zip(&reports) {
        let c = curve(&b.spec);
        let s = r.sndr.as_ref().expect("simulated");
        let _ = writeln!(fig2, "{c},{},{},{:.12},{:.12}", r.architecture, r.switches, r.raw, r.normalized);
        let _ = writeln!(fig3, "{c},{},{},{},{}", r.architecture, r.switches, db(s.mean_db), db(s.linear_mean_db));
        let _ = writeln!(fig4, "{c},{},{},{},{}", r.architecture, r.switches, s.yield_quantile, db(s.yield_db));
    }
    paths.push(write(&cfg.out, "fig2_metric.csv", &fig2)?);
    paths.push(write(&cfg.out, "fig3_mean_sndr.csv", &fig3)?);
    paths.push(write(&cfg.out, "fig4_yield_sndr.csv", &fig4)?);

    let mut t1 = header(&prov);
    t1.push_str(&table1_check(&pmf, &built)?);
    paths.push(write(&cfg.out, "table1_check.txt", &t1)?);

    let b13 = built.iter().find(|b| b.spec == ArchSpec::Table1(13)).expect("built");
    let mut t2 = header(&prov);
    t2.push_str(&table2_check(&b13.basis, &b13.mapping)?);
    paths.push(write(&cfg.out, "table2_check.txt", &t2)?);
    write(&cfg.out, "table1-13.mapping.csv", &io::mapping_to_csv(&b13.mapping, &b13.basis, &prov)?)?;
    Ok(paths)
}
