use crate::error::{Error, Result};
use crate::graphgen::Graph;
use crate::scalar::Scalar;
use crate::sparse_core::{CsrMatrix, DEFAULT_DENSE_CAP};

/// Matrix the Sobolev terms are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ShiftBase {
    #[default]
    Adjacency,
    Laplacian,
}

/// How the ρ-th operator is obtained from `M + εI`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PowerMode {
    /// Hadamard power `(M + εI)^(ρ)`; keeps the sparsity of `M + εI`.
    #[default]
    Hadamard,
    /// Ordinary matrix power `(M + εI)^ρ`, densified; limited to graphs of
    /// at most `dense_cap` nodes.
    Regular { dense_cap: usize },
    /// Every branch uses the first-order operator (no powers at all).
    HadamardOff,
    /// Operators supplied by the caller.
    Custom,
}

impl PowerMode {
    pub fn regular() -> Self {
        PowerMode::Regular {
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

/// Normalized shift operators `S_(ρ) = D̄_ρ^{-1/2} Ā_ρ D̄_ρ^{-1/2}` for
/// `ρ = 1..=α`, computed once and shared by every layer. The `ρ = 0`
/// branch is the identity and is not stored.
#[derive(Clone, Debug)]
pub struct ShiftBank<T> {
    epsilon: T,
    operators: Vec<CsrMatrix<T>>,
    base: ShiftBase,
    mode: PowerMode,
    normalized: bool,
}

/// `ā_ij / sqrt(d_i d_j)` with `d` the row sums of `m`.
pub fn symmetric_normalize<T: Scalar>(m: &CsrMatrix<T>) -> Result<CsrMatrix<T>> {
    let degrees = m.row_sums();
    if let Some(node) = degrees
        .iter()
        .position(|&d| !(d > T::zero()) || !d.is_finite())
    {
        return Err(Error::ZeroDegree { node });
    }
    let triplets = m
        .iter()
        .map(|(i, j, v)| (i, j, v / (degrees[i] * degrees[j]).sqrt()));
    let out = CsrMatrix::from_triplets(m.n_rows(), m.n_cols(), triplets)?;
    if out.nnz() != m.nnz() {
        return Err(Error::InvalidCsr(
            "normalization underflowed an entry".into(),
        ));
    }
    Ok(out)
}

impl<T: Scalar> ShiftBank<T> {
    pub fn build(
        g: &Graph<T>,
        epsilon: T,
        alpha: usize,
        base: ShiftBase,
        mode: PowerMode,
    ) -> Result<Self> {
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "shift bank needs epsilon > 0, got {epsilon}"
            )));
        }
        if alpha == 0 {
            return Err(Error::InvalidArgument("alpha must be at least 1".into()));
        }
        let m = match base {
            ShiftBase::Adjacency => g.adjacency().clone(),
            ShiftBase::Laplacian => g.laplacian(),
        };
        let shifted = m.add_identity(epsilon)?;
        let mut operators = Vec::with_capacity(alpha);
        for rho in 1..=alpha {
            let power = u32::try_from(rho).expect("small alpha");
            let raw = match mode {
                PowerMode::Hadamard => shifted.hadamard_power(power)?,
                PowerMode::Regular { dense_cap } => CsrMatrix::from_dense(
                    &shifted.matrix_power_dense_capped(power, dense_cap)?,
                    T::zero(),
                ),
                PowerMode::HadamardOff => shifted.clone(),
                PowerMode::Custom => {
                    return Err(Error::InvalidArgument(
                        "custom banks are built with ShiftBank::custom".into(),
                    ))
                }
            };
            operators.push(symmetric_normalize(&raw)?);
        }
        Ok(Self {
            epsilon,
            operators,
            base,
            mode,
            normalized: true,
        })
    }

    /// Bank over caller-provided operators, e.g. a GCN propagation matrix.
    pub fn custom(operators: Vec<CsrMatrix<T>>, epsilon: T, normalized: bool) -> Result<Self> {
        let Some(first) = operators.first() else {
            return Err(Error::InvalidArgument("empty operator list".into()));
        };
        let shape = first.shape();
        if operators
            .iter()
            .any(|o| o.shape() != shape || !o.is_square())
        {
            return Err(Error::InvalidArgument(
                "operators must share one square shape".into(),
            ));
        }
        Ok(Self {
            epsilon,
            operators,
            base: ShiftBase::Adjacency,
            mode: PowerMode::Custom,
            normalized,
        })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn alpha(&self) -> usize {
        self.operators.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.operators[0].n_rows()
    }

    pub fn base(&self) -> ShiftBase {
        self.base
    }

    pub fn mode(&self) -> PowerMode {
        self.mode
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `S_(ρ)` for `1 <= ρ <= α`.
    pub fn operator(&self, rho: usize) -> Option<&CsrMatrix<T>> {
        rho.checked_sub(1).and_then(|k| self.operators.get(k))
    }

    pub fn operators(&self) -> &[CsrMatrix<T>] {
        &self.operators
    }

    /// Total stored entries over all operators.
    pub fn stored_entries(&self) -> usize {
        self.operators.iter().map(CsrMatrix::nnz).sum()
    }
}

/// Normalized sparse-Sobolev adjacency bank.
pub fn build_shift_bank<T: Scalar>(g: &Graph<T>, epsilon: T, alpha: usize) -> Result<ShiftBank<T>> {
    ShiftBank::build(g, epsilon, alpha, ShiftBase::Adjacency, PowerMode::Hadamard)
}
