use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::Graph;
use crate::scalar::Scalar;
use crate::sparse_core::{CsrMatrix, Dense};

/// Pointwise nonlinearity; both variants are 1-Lipschitz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    #[default]
    Relu,
}

impl Activation {
    pub fn apply<T: Scalar>(self, z: &Dense<T>) -> Dense<T> {
        match self {
            Activation::Identity => z.clone(),
            Activation::Relu => z.map(|v| v.max(T::zero())),
        }
    }

    /// Gradient w.r.t. the pre-activation, given the gradient w.r.t. the
    /// output `b = σ(z)`.
    pub fn backprop<T: Scalar>(self, grad_out: &Dense<T>, out: &Dense<T>) -> Result<Dense<T>> {
        match self {
            Activation::Identity => Ok(grad_out.clone()),
            Activation::Relu => {
                let mask = out.map(|v| if v > T::zero() { T::one() } else { T::zero() });
                grad_out.hadamard(&mask)
            }
        }
    }
}

/// `σ(S H W + b)`; `op = None` is the identity shift of the `ρ = 0` branch.
pub fn branch_forward<T: Scalar>(
    op: Option<&CsrMatrix<T>>,
    h: &Dense<T>,
    w: &Dense<T>,
    bias: Option<&[T]>,
    activation: Activation,
) -> Result<Dense<T>> {
    let mut z = match op {
        Some(s) => s.spmm(h)?.matmul(w)?,
        None => h.matmul(w)?,
    };
    if let Some(b) = bias {
        z.add_row_broadcast(b)?;
    }
    Ok(activation.apply(&z))
}

fn check_shapes<T: Scalar>(op: &'static str, branches: &[&Dense<T>]) -> Result<(usize, usize)> {
    let Some(first) = branches.first() else {
        return Err(Error::InvalidArgument(format!("{op}: no branches")));
    };
    let shape = first.shape();
    if let Some(b) = branches.iter().find(|b| b.shape() != shape) {
        return Err(Error::DimensionMismatch {
            op,
            left: shape,
            right: b.shape(),
        });
    }
    Ok(shape)
}

/// `Σ_i μ_i B_i`.
pub fn fuse_linear<T: Scalar>(branches: &[&Dense<T>], mu: &[T]) -> Result<Dense<T>> {
    let (rows, cols) = check_shapes("linear fusion", branches)?;
    if mu.len() != branches.len() {
        return Err(Error::DimensionMismatch {
            op: "linear fusion",
            left: (branches.len(), 1),
            right: (mu.len(), 1),
        });
    }
    let mut out = Dense::zeros(rows, cols);
    for (b, &m) in branches.iter().zip(mu) {
        out.add_scaled_assign(m, b)?;
    }
    Ok(out)
}

/// `[B_0, …, B_α] W_MLP`.
pub fn fuse_mlp<T: Scalar>(branches: &[&Dense<T>], w_mlp: &Dense<T>) -> Result<Dense<T>> {
    check_shapes("mlp fusion", branches)?;
    Dense::hcat(branches)?.matmul(w_mlp)
}

/// The GCN propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}`, assembled
/// directly from the edge list.
pub fn gcn_operator<T: Scalar>(g: &Graph<T>) -> Result<CsrMatrix<T>> {
    let n = g.n_nodes();
    let mut degree = vec![T::one(); n];
    for (i, j, w) in g.edges() {
        degree[i] += w;
        degree[j] += w;
    }
    let mut triplets = Vec::with_capacity(n + 2 * g.n_edges());
    for (i, &d) in degree.iter().enumerate() {
        triplets.push((i, i, T::one() / d));
    }
    for (i, j, w) in g.edges() {
        let v = w / (degree[i] * degree[j]).sqrt();
        triplets.push((i, j, v));
        triplets.push((j, i, v));
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// One GCN layer `σ(Ŝ H W)` with `Ŝ` from [`gcn_operator`].
pub fn gcn_layer<T: Scalar>(
    op: &CsrMatrix<T>,
    h: &Dense<T>,
    w: &Dense<T>,
    activation: Activation,
) -> Result<Dense<T>> {
    Ok(activation.apply(&op.spmm(h)?.matmul(w)?))
}
