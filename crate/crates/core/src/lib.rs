//! Design and evaluation of current-steering DAC weight architectures.
//!
//! A DAC with `L` current sources of integer weights `B` converts an `N`-bit
//! codeword `x` by switching on the sources selected by `W(x)`. Random
//! per-source mismatch turns into a static, code-dependent error whose mean
//! square over inputs and fabricated instances has a closed form in the
//! activation probabilities `E_x[W_i]`. This crate computes that metric,
//! searches mappings and bases that minimise it, and checks the result
//! with Monte Carlo SNDR statistics.

pub mod basis;
pub mod error;
pub mod io;
pub mod mapping;
pub mod metric;
pub mod montecarlo;
pub mod optimizer;
pub mod reference;
pub mod repset;
pub mod seed;

pub use basis::{dac_output, ArchitectureKind, Basis, MismatchRealization, SegmentSpec, SelectionVector};
pub use error::{Error, Result};
pub use mapping::RepresentationTable;
pub use metric::{
    activation_profile, mismatch_mse, optimal_rms, receiver_error, ActivationProfile, InputPmf, MetricValue,
    PmfKind,
};
pub use montecarlo::{run_simulation, sampled_waveform_sndr, sndr_one_realization, SimConfig, SimMode, SndrDistribution};
pub use optimizer::{
    anneal_basis, descend_representations, evaluate_architecture, AnnealConfig, AnnealOutcome, ArchEvaluation,
    DescentConfig, OptimizationTrace,
};
pub use repset::{enumerate_all, is_complete, mean_representation_count, RepresentationIndex, RepresentationSet};

/// Largest supported codeword width.
pub const MAX_BITS: u32 = 16;

/// Unit-source relative mismatch used for the reported simulations.
pub const DEFAULT_SIGMA_DELTA: f64 = 0.05;
