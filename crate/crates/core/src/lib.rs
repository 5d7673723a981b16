//! Maximum-likelihood tomography of a light mode probed by displaced on/off
//! detection.
//!
//! The crate builds the no-count POVM elements for a plan of (efficiency,
//! displacement) settings, analyzes the transfer function `G = sum_j A_j`
//! whose dominant eigenspace fixes the trustworthy reconstruction subspace,
//! runs the EM fixed-point solver for the maximum-likelihood state, attaches
//! Fisher-information error bars, and provides the pointwise Wigner-function
//! baseline together with its density-matrix back-transform.

pub mod error;
pub mod fisher;
pub mod fock;
pub mod matrix;
pub mod mle;
pub mod povm;
pub mod simulate;
pub mod wigner;

pub use error::{Error, Result};
pub use fisher::{dprob, fisher_information, variance_table, Part, VarianceTable};
pub use fock::{
    displacement_operator, fidelity, trace_distance, DensityMatrix, DimensionPolicy,
};
pub use matrix::{hermitian_eig, inv_sqrt_projected, CMatrix, HermitianEigensystem};
pub use mle::{
    em_reconstruct, extremal_residual, log_likelihood, r_operator, ReconstructionConfig,
    ReconstructionResult,
};
pub use povm::{
    build_elements, build_povm_element, build_transfer_function,
    build_transfer_function_weighted, probability, transfer_function_for_elements, PovmElement,
    Setting, TransferFunction, Weighting,
};
pub use simulate::{
    counts_from_records, exact_counts, read_records, simulate_counts,
    simulate_counts_for_elements, write_records, ExperimentPlan, MeasurementRecord,
};
pub use wigner::{
    back_transform_diagonals, displaced_number_distribution, reconstruct_point, scan_grid,
    scan_to_csv, wigner_true, EfficiencySample, GridSpec, TrialBudget, WignerPoint,
    WignerScanConfig, WignerScanRow,
};
