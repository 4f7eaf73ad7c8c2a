//! Sparse Sobolev graph neural networks.
//!
//! The building block is the sparse Sobolev term `(M + εI)^(ρ)`: the
//! elementwise (Hadamard) power of a shifted graph matrix. Unlike the
//! ordinary power `(M + εI)^ρ` it keeps the sparsity pattern of `M + εI`,
//! while still reweighting the graph spectrum with growing `ρ`.
//!
//! * [`sparse_core`]: CSR/dense kernels, Kronecker products, eigensolver.
//! * [`graphgen`]: graphs, generators, perturbations, file formats.
//! * [`sobolev`]: Sobolev terms and norm, normalized shift banks, spectra.
//! * [`neural`]: S2-GNN layers, training, GCN baseline, checkpoints.
//! * [`stability`]: perturbation bounds and the SNR sweep.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32`/`f64`);
//! the aliases below fix `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graphgen;
pub mod neural;
pub mod scalar;
pub mod sobolev;
pub mod sparse_core;
pub mod stability;

pub use error::{Error, Result};

pub type SparseMatrix = sparse_core::CsrMatrix<f64>;
pub type DenseMatrix = sparse_core::Dense<f64>;
pub type Graph64 = graphgen::Graph<f64>;
pub type ShiftBank64 = sobolev::ShiftBank<f64>;
pub type Model64 = neural::Model<f64>;
