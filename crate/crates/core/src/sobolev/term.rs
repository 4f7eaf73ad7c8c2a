use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::{CsrMatrix, Dense, DEFAULT_DENSE_CAP};

/// Either the Hadamard-power term (sparse, same support as `M + εI`) or
/// the ordinary matrix power (dense).
#[derive(Clone, Debug)]
pub enum SobolevTerm<T> {
    Sparse(CsrMatrix<T>),
    Dense(Dense<T>),
}

impl<T: Scalar> SobolevTerm<T> {
    pub fn to_dense(&self) -> Dense<T> {
        match self {
            SobolevTerm::Sparse(m) => m.to_dense(),
            SobolevTerm::Dense(m) => m.clone(),
        }
    }

    pub fn as_sparse(&self) -> Option<&CsrMatrix<T>> {
        match self {
            SobolevTerm::Sparse(m) => Some(m),
            SobolevTerm::Dense(_) => None,
        }
    }
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<()> {
    if epsilon < T::zero() || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and nonnegative, got {epsilon}"
        )));
    }
    Ok(())
}

/// `(M + εI)^(ρ)` when `sparse`, otherwise the dense power `(M + εI)^ρ`.
pub fn sobolev_term<T: Scalar>(
    m: &CsrMatrix<T>,
    epsilon: T,
    rho: u32,
    sparse: bool,
) -> Result<SobolevTerm<T>> {
    sobolev_term_capped(m, epsilon, rho, sparse, DEFAULT_DENSE_CAP)
}

pub fn sobolev_term_capped<T: Scalar>(
    m: &CsrMatrix<T>,
    epsilon: T,
    rho: u32,
    sparse: bool,
    dense_cap: usize,
) -> Result<SobolevTerm<T>> {
    check_epsilon(epsilon)?;
    let shifted = m.add_identity(epsilon)?;
    if sparse {
        Ok(SobolevTerm::Sparse(shifted.hadamard_power(rho)?))
    } else {
        Ok(SobolevTerm::Dense(
            shifted.matrix_power_dense_capped(rho, dense_cap)?,
        ))
    }
}

/// The sparse Sobolev norm `‖x‖_(ρ),ε = sqrt(xᵀ (L + εI)^(ρ) x)` with the
/// operator precomputed for repeated evaluation.
///
/// The quadratic form of a symmetric `K` is evaluated as
///
/// ```text
/// Σ_i (K_ii − Σ_{j≠i} |K_ij|) x_i²  +  Σ_{i<j} |K_ij| (x_i + sgn(K_ij) x_j)²
/// ```
///
/// Every term is nonnegative when `K` is diagonally dominant, which is the
/// case for Hadamard powers of a shifted Laplacian. Constant vectors in the
/// `ε = 0, ρ = 1` semi-norm case therefore evaluate to exactly zero.
#[derive(Clone, Debug)]
pub struct SparseSobolevNorm<T> {
    operator: CsrMatrix<T>,
    diagonal_slack: Vec<T>,
}

/// Largest negative quadratic form tolerated before rejecting the input.
pub const RADICAND_TOLERANCE: f64 = 1e-10;

impl<T: Scalar> SparseSobolevNorm<T> {
    pub fn new(laplacian: &CsrMatrix<T>, epsilon: T, rho: u32) -> Result<Self> {
        let operator = match sobolev_term(laplacian, epsilon, rho, true)? {
            SobolevTerm::Sparse(k) => k,
            SobolevTerm::Dense(_) => unreachable!("sparse mode"),
        };
        if let Some(asym) = operator.max_asymmetry() {
            if asym > T::zero() {
                return Err(Error::NotSymmetric {
                    max_asymmetry: asym.as_f64(),
                });
            }
        }
        let diagonal_slack = (0..operator.n_rows())
            .map(|i| {
                let mut diag = T::zero();
                let mut off = T::zero();
                for (j, v) in operator.row_iter(i) {
                    if j == i {
                        diag = v;
                    } else {
                        off += v.abs();
                    }
                }
                diag - off
            })
            .collect();
        Ok(Self {
            operator,
            diagonal_slack,
        })
    }

    pub fn operator(&self) -> &CsrMatrix<T> {
        &self.operator
    }

    /// `⟨x, y⟩_(ρ),ε = xᵀ (L + εI)^(ρ) y`.
    pub fn inner(&self, x: &[T], y: &[T]) -> Result<T> {
        let ky = self.operator.spmv(y)?;
        if x.len() != ky.len() {
            return Err(Error::DimensionMismatch {
                op: "sobolev inner product",
                left: self.operator.shape(),
                right: (x.len(), 1),
            });
        }
        Ok(x.iter().zip(&ky).map(|(&a, &b)| a * b).sum())
    }

    pub fn norm_squared(&self, x: &[T]) -> Result<T> {
        if x.len() != self.operator.n_cols() {
            return Err(Error::DimensionMismatch {
                op: "sobolev norm",
                left: self.operator.shape(),
                right: (x.len(), 1),
            });
        }
        let mut q = T::zero();
        for (i, &xi) in x.iter().enumerate() {
            q += self.diagonal_slack[i] * xi * xi;
            for (j, v) in self.operator.row_iter(i) {
                if j > i {
                    let t = if v > T::zero() { xi + x[j] } else { xi - x[j] };
                    q += v.abs() * t * t;
                }
            }
        }
        if q < -T::lit(RADICAND_TOLERANCE) {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: q.as_f64(),
            });
        }
        Ok(q.max(T::zero()))
    }

    pub fn norm(&self, x: &[T]) -> Result<T> {
        Ok(self.norm_squared(x)?.sqrt())
    }
}

/// One-shot `‖x‖_(ρ),ε`; build a [`SparseSobolevNorm`] for repeated use.
pub fn sparse_sobolev_norm<T: Scalar>(
    x: &[T],
    laplacian: &CsrMatrix<T>,
    epsilon: T,
    rho: u32,
) -> Result<T> {
    SparseSobolevNorm::new(laplacian, epsilon, rho)?.norm(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::Graph;

    fn p3_laplacian() -> CsrMatrix<f64> {
        Graph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)])
            .unwrap()
            .laplacian()
    }

    #[test]
    fn two_node_sparse_term_is_all_ones() {
        let g = Graph::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
        let t = sobolev_term(g.adjacency(), 1.0, 2, true).unwrap();
        assert_eq!(t.to_dense(), Dense::filled(2, 2, 1.0));
    }

    #[test]
    fn first_order_without_shift_is_identity_map() {
        let l = p3_laplacian();
        for sparse in [true, false] {
            assert_eq!(
                sobolev_term(&l, 0.0, 1, sparse).unwrap().to_dense(),
                l.to_dense()
            );
        }
    }

    #[test]
    fn densification_on_the_path() {
        let l = p3_laplacian();
        let sparse = sobolev_term(&l, 0.0, 2, true).unwrap();
        let dense = sobolev_term(&l, 0.0, 2, false).unwrap();
        assert_eq!(sparse.to_dense()[(0, 2)], 0.0);
        assert_eq!(dense.to_dense()[(0, 2)], 1.0);
        assert!(sparse.as_sparse().unwrap().same_pattern(&l));
    }

    #[test]
    fn dense_term_respects_cap() {
        let l = p3_laplacian();
        assert!(matches!(
            sobolev_term_capped(&l, 1.0, 2, false, 2),
            Err(Error::DenseCapExceeded { .. })
        ));
        assert!(sobolev_term(&l, -1.0, 2, true).is_err());
    }

    #[test]
    fn norm_examples() {
        let l = p3_laplacian();
        assert_eq!(
            sparse_sobolev_norm(&[2.5, 2.5, 2.5], &l, 0.0, 1).unwrap(),
            0.0
        );
        assert_eq!(sparse_sobolev_norm(&[0.0; 3], &l, 1.0, 3).unwrap(), 0.0);
        let p2 = Graph::from_edges(2, vec![(0, 1, 1.0)]).unwrap().laplacian();
        assert_eq!(sparse_sobolev_norm(&[1.0, -1.0], &p2, 0.0, 1).unwrap(), 2.0);
    }

    #[test]
    fn split_form_matches_plain_quadratic_form() {
        let g =
            Graph::from_edges(4, vec![(0, 1, 0.3), (1, 2, 2.0), (2, 3, 0.7), (0, 3, 1.1)]).unwrap();
        let x = [0.4f64, -1.2, 2.0, 0.1];
        for rho in 1..=4 {
            let norm = SparseSobolevNorm::new(&g.laplacian(), 0.5, rho).unwrap();
            let direct = norm.inner(&x, &x).unwrap();
            let split = norm.norm_squared(&x).unwrap();
            assert!((direct - split).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn indefinite_input_is_rejected() {
        let m = CsrMatrix::from_diag(&[-1.0, 1.0]);
        assert!(sparse_sobolev_norm(&[1.0, 0.0], &m, 0.0, 1).is_err());
    }
}
