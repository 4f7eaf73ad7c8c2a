use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::csr::CsrMatrix;
use super::dense::Dense;
use super::DEFAULT_KRON_CAP;

/// Kronecker product with the default size cap.
pub fn kronecker<T: Scalar>(a: &Dense<T>, b: &Dense<T>) -> Result<Dense<T>> {
    kronecker_capped(a, b, DEFAULT_KRON_CAP)
}

/// Standard block layout: block `(i, j)` of the result is `a[i, j] * b`.
pub fn kronecker_capped<T: Scalar>(a: &Dense<T>, b: &Dense<T>, cap: usize) -> Result<Dense<T>> {
    let rows = a.n_rows() * b.n_rows();
    let cols = a.n_cols() * b.n_cols();
    if rows.max(cols) > cap {
        return Err(Error::DenseCapExceeded {
            size: rows.max(cols),
            cap,
        });
    }
    let (p, q) = b.shape();
    Ok(Dense::from_fn(rows, cols, |r, c| {
        a[(r / p, c / q)] * b[(r % p, c % q)]
    }))
}

/// Selector `P_N ∈ {0,1}^{N²×N}` with `P[i·N + i, i] = 1`, so that
/// `S ∘ T = P_Nᵀ (S ⊗ T) P_N` for square `N×N` matrices.
pub fn partial_permutation<T: Scalar>(n: usize) -> CsrMatrix<T> {
    CsrMatrix::from_triplets(n * n, n, (0..n).map(|i| (i * n + i, i, T::one())))
        .expect("selector entries are in bounds")
}

/// `Pᵀ K P` for a selector `P` with one entry per column, without forming
/// the products densely: result `(i, j)` is `K[row(i), row(j)]`.
pub fn compress_with_selector<T: Scalar>(p: &CsrMatrix<T>, k: &Dense<T>) -> Result<Dense<T>> {
    if k.n_rows() != p.n_rows() || k.n_cols() != p.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "compress_with_selector",
            left: p.shape(),
            right: k.shape(),
        });
    }
    // Pᵀ K P = (P ᵀ (Pᵀ K)ᵀ)ᵀ computed through sparse products
    let pt_k = p.spmm_transpose(k)?;
    let pt_k_p = p.spmm_transpose(&pt_k.transpose())?;
    Ok(pt_k_p.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_examples() {
        let i2 = Dense::<f64>::identity(2);
        assert_eq!(kronecker(&i2, &i2).unwrap(), Dense::identity(4));

        let b = Dense::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let one = Dense::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(kronecker(&one, &b).unwrap(), b);

        let swap = Dense::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let two = Dense::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(
            kronecker(&swap, &two).unwrap(),
            Dense::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn kronecker_cap() {
        let a = Dense::<f64>::zeros(70, 70);
        assert!(matches!(
            kronecker(&a, &a),
            Err(Error::DenseCapExceeded {
                size: 4900,
                cap: 4096
            })
        ));
    }

    #[test]
    fn partial_permutation_small_cases() {
        let p1 = partial_permutation::<f64>(1);
        assert_eq!(p1.to_dense(), Dense::identity(1));
        let p2 = partial_permutation::<f64>(2);
        assert_eq!(p2.shape(), (4, 2));
        assert_eq!(p2.nnz(), 2);
        assert_eq!(p2.get(0, 0), 1.0);
        assert_eq!(p2.get(3, 1), 1.0);
    }
}
