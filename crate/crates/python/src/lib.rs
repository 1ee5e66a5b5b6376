//! Python bindings for `csdac-core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use csdac_core as core;
use csdac_core::optimizer::descend_multistart;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Integer source weights of a DAC with `n_bits` inputs.
#[pyclass(name = "Basis", module = "csdac", frozen, skip_from_py_object, eq)]
#[derive(Clone, PartialEq)]
struct PyBasis(core::Basis);

#[pymethods]
impl PyBasis {
    #[new]
    fn new(n_bits: u32, weights: Vec<u32>) -> PyResult<Self> {
        core::Basis::new(n_bits, weights).map(PyBasis).map_err(err)
    }

    #[staticmethod]
    fn binary(n_bits: u32) -> PyResult<Self> {
        core::Basis::binary(n_bits).map(PyBasis).map_err(err)
    }

    #[staticmethod]
    fn thermometer(n_bits: u32) -> PyResult<Self> {
        core::Basis::thermometer(n_bits).map(PyBasis).map_err(err)
    }

    /// `unary_bits` MSBs thermometer coded, the rest binary.
    #[staticmethod]
    fn segmented(unary_bits: u32, n_bits: u32) -> PyResult<Self> {
        let spec = core::SegmentSpec::new(unary_bits, n_bits).map_err(err)?;
        core::Basis::segmented(spec, n_bits).map(PyBasis).map_err(err)
    }

    /// Published optimized 8-bit basis with `length` switches (9 to 13).
    #[staticmethod]
    fn published(length: usize) -> PyResult<Self> {
        core::reference::published_basis(length)
            .map(PyBasis)
            .ok_or_else(|| PyValueError::new_err(format!("no published basis of length {length}")))
    }

    #[getter]
    fn n_bits(&self) -> u32 {
        self.0.n_bits()
    }

    #[getter]
    fn weights(&self) -> Vec<u32> {
        self.0.weights().to_vec()
    }

    fn is_complete(&self) -> bool {
        self.0.is_complete()
    }

    /// Average number of switch subsets per codeword.
    fn mean_representation_count(&self) -> PyResult<f64> {
        core::mean_representation_count(&self.0).map_err(err)
    }

    /// Canonical mapping of a binary, thermometer or segmented basis.
    fn canonical_mapping(&self) -> PyResult<PyMapping> {
        let kind = if self.0 == core::Basis::binary(self.0.n_bits()).map_err(err)? {
            core::ArchitectureKind::Binary
        } else if self.0 == core::Basis::thermometer(self.0.n_bits()).map_err(err)? {
            core::ArchitectureKind::Thermometer
        } else {
            let n = self.0.n_bits();
            let spec = (0..=n)
                .filter_map(|m| core::SegmentSpec::new(m, n).ok())
                .find(|s| core::Basis::segmented(*s, n).ok().as_ref() == Some(&self.0))
                .ok_or_else(|| PyValueError::new_err("basis has no canonical mapping"))?;
            core::ArchitectureKind::Segmented(spec)
        };
        kind.canonical_mapping(&self.0).map(PyMapping).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Basis(n_bits={}, weights={:?})", self.0.n_bits(), self.0.weights())
    }
}

/// Probability of every input codeword.
#[pyclass(name = "InputPmf", module = "csdac", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPmf(core::InputPmf);

#[pymethods]
impl PyPmf {
    #[staticmethod]
    fn uniform(n_bits: u32) -> PyResult<Self> {
        core::InputPmf::uniform(n_bits).map(PyPmf).map_err(err)
    }

    /// Clipped Gaussian of RMS `sigma_s` LSB; the SQNR-optimal RMS when
    /// omitted.
    #[staticmethod]
    #[pyo3(signature = (n_bits, sigma_s=None))]
    fn gaussian(n_bits: u32, sigma_s: Option<f64>) -> PyResult<Self> {
        let s = sigma_s.unwrap_or_else(|| core::optimal_rms(n_bits));
        core::InputPmf::gaussian(n_bits, s).map(PyPmf).map_err(err)
    }

    #[staticmethod]
    fn custom(probs: Vec<f64>) -> PyResult<Self> {
        core::InputPmf::custom(probs).map(PyPmf).map_err(err)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Switch selection of every codeword; rows are bit strings, switch 0 first.
#[pyclass(name = "Mapping", module = "csdac", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMapping(core::RepresentationTable);

#[pymethods]
impl PyMapping {
    #[staticmethod]
    fn from_rows(basis: &PyBasis, rows: Vec<String>) -> PyResult<Self> {
        let rows = rows
            .iter()
            .map(|r| core::SelectionVector::parse_bits(r))
            .collect::<core::Result<Vec<_>>>()
            .map_err(err)?;
        core::RepresentationTable::new(&basis.0, rows).map(PyMapping).map_err(err)
    }

    fn rows(&self) -> Vec<String> {
        self.0.rows().iter().map(|r| r.to_bit_string()).collect()
    }

    fn row(&self, codeword: usize) -> PyResult<String> {
        self.0
            .rows()
            .get(codeword)
            .map(|r| r.to_bit_string())
            .ok_or_else(|| PyValueError::new_err(format!("codeword {codeword} out of range")))
    }

    fn to_csv(&self, basis: &PyBasis) -> PyResult<String> {
        core::io::mapping_to_csv(&self.0, &basis.0, &[]).map_err(err)
    }

    fn to_lut(&self, basis: &PyBasis) -> PyResult<String> {
        core::io::lut_to_string(&self.0, &basis.0, &[]).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyfunction]
fn optimal_rms(n_bits: u32) -> f64 {
    core::optimal_rms(n_bits)
}

/// `(raw, normalized, mse)` of a mapping.
#[pyfunction]
#[pyo3(signature = (mapping, basis, pmf, sigma_delta=core::DEFAULT_SIGMA_DELTA))]
fn mismatch_mse(mapping: &PyMapping, basis: &PyBasis, pmf: &PyPmf, sigma_delta: f64) -> PyResult<(f64, f64, f64)> {
    let m = core::mismatch_mse(&mapping.0, &basis.0, &pmf.0, sigma_delta).map_err(err)?;
    Ok((m.raw, m.normalized, m.mse))
}

/// Best mapping over `restarts` coordinate descents; returns the mapping and
/// its objective trace.
#[pyfunction]
#[pyo3(signature = (basis, pmf, restarts=1, max_sweeps=1000, seed=1))]
fn descend(
    py: Python<'_>,
    basis: &PyBasis,
    pmf: &PyPmf,
    restarts: usize,
    max_sweeps: usize,
    seed: u64,
) -> PyResult<(PyMapping, Vec<f64>)> {
    py.detach(|| {
        let index = core::enumerate_all(&basis.0)?;
        let cfg = core::DescentConfig { max_sweeps, seed };
        descend_multistart(&index, &basis.0, &pmf.0, &cfg, restarts)
    })
    .map(|(t, trace)| (PyMapping(t), trace.objective))
    .map_err(err)
}

/// Simulated-annealing basis search; returns `(basis, mapping, raw)`.
#[pyfunction]
#[pyo3(signature = (n_bits, length, pmf, restarts=100, seed=1))]
fn anneal(
    py: Python<'_>,
    n_bits: u32,
    length: usize,
    pmf: &PyPmf,
    restarts: usize,
    seed: u64,
) -> PyResult<(PyBasis, PyMapping, f64)> {
    let cfg = core::AnnealConfig { restarts, seed, ..core::AnnealConfig::default() };
    let out = py.detach(|| core::anneal_basis(n_bits, length, &pmf.0, &cfg)).map_err(err)?;
    Ok((PyBasis(out.basis), PyMapping(out.mapping), out.raw))
}

/// Per-instance SNDR values (dB) and a summary dict.
#[pyfunction]
#[pyo3(signature = (mapping, basis, pmf, realizations=10_000, sigma_delta=core::DEFAULT_SIGMA_DELTA, yield_quantile=0.95, seed=1))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    mapping: &PyMapping,
    basis: &PyBasis,
    pmf: &PyPmf,
    realizations: usize,
    sigma_delta: f64,
    yield_quantile: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, Bound<'py, pyo3::types::PyDict>)> {
    let cfg = core::SimConfig { realizations, sigma_delta, yield_quantile, seed, ..core::SimConfig::default() };
    let dist = py.detach(|| core::run_simulation(&mapping.0, &basis.0, &pmf.0, &cfg)).map_err(err)?;
    let s = &dist.summary;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("mean_db", s.mean_db)?;
    d.set_item("linear_mean_db", s.linear_mean_db)?;
    d.set_item("yield_quantile", s.yield_quantile)?;
    d.set_item("yield_db", s.yield_db)?;
    d.set_item("min_db", s.min_db)?;
    d.set_item("max_db", s.max_db)?;
    d.set_item("mean_error_power", s.mean_error_power)?;
    d.set_item("signal_power", s.signal_power)?;
    Ok((dist.values, d))
}

#[pymodule]
fn csdac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PyPmf>()?;
    m.add_class::<PyMapping>()?;
    m.add_function(wrap_pyfunction!(optimal_rms, m)?)?;
    m.add_function(wrap_pyfunction!(mismatch_mse, m)?)?;
    m.add_function(wrap_pyfunction!(descend, m)?)?;
    m.add_function(wrap_pyfunction!(anneal, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
