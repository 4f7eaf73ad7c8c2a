use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),

    #[error("Hadamard power order must be a positive integer (got 0); use the identity branch explicitly")]
    ZeroPower,

    #[error("Hadamard power underflowed to zero at stored entry {index}")]
    PowerUnderflow { index: usize },

    #[error("dense operation of size {size} exceeds the cap of {cap}")]
    DenseCapExceeded { size: usize, cap: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("zero degree at node {node}; cannot normalize")]
    ZeroDegree { node: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph has no labels")]
    MissingLabels,

    #[error("mask selects no nodes")]
    EmptyMask,

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
