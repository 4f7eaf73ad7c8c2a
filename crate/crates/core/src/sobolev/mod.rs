//! Sobolev and sparse-Sobolev terms and norms, the normalized shift-operator
//! bank, polynomial graph filters and the Kronecker spectrum oracle.

mod bank;
mod filter;
mod spectrum;
mod term;

pub use bank::{build_shift_bank, symmetric_normalize, PowerMode, ShiftBank, ShiftBase};
pub use filter::{apply_polynomial_filter, FilterCoefficients};
pub use spectrum::{
    eigen_penalization_curves, hadamard_power_via_kronecker, verify_hadamard_spectrum, CurvePoint,
    PenalizationCurves, SPECTRUM_ORACLE_MAX_NODES,
};
pub use term::{
    sobolev_term, sobolev_term_capped, sparse_sobolev_norm, SobolevTerm, SparseSobolevNorm,
    RADICAND_TOLERANCE,
};
