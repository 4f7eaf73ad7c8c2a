//! Linear-algebra kernels: canonical CSR storage, Hadamard and ordinary
//! powers, sparse-dense products, Kronecker products, the partial
//! permutation selector linking Hadamard and Kronecker products, and a
//! Jacobi eigensolver for small symmetric matrices.

mod csr;
mod dense;
mod eig;
mod kron;

pub use csr::CsrMatrix;
pub use dense::Dense;
pub use eig::{
    condition_number, eig_sym, spectral_norm, spectral_norm_symmetric, SpectralDecomposition,
    JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE, SYMMETRY_TOLERANCE,
};
pub use kron::{compress_with_selector, kronecker, kronecker_capped, partial_permutation};

/// Largest row count accepted by dense operations.
pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Largest dimension of a dense Kronecker product.
pub const DEFAULT_KRON_CAP: usize = 4096;
