//! Cyclic Jacobi eigensolver for small dense symmetric matrices, plus the
//! graph Fourier transform and condition numbers built on top of it.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::csr::CsrMatrix;
use super::dense::Dense;
use super::DEFAULT_DENSE_CAP;

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Off-diagonal Frobenius threshold, relative to `max(1, ‖M‖_F)`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Symmetry tolerance on input, relative to `max(1, max|m_ij|)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Eigenvalues sorted ascending with matching orthonormal eigenvector
/// columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Dense<T>,
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(λ) Uᵀ`.
    pub fn reconstruct(&self) -> Dense<T> {
        let u = &self.eigenvectors;
        let n = self.dim();
        let scaled = Dense::from_fn(n, n, |i, j| u[(i, j)] * self.eigenvalues[j]);
        scaled.matmul_t(u).expect("square factors")
    }

    /// Graph Fourier transform `x̂ = Uᵀ x`.
    pub fn gft(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                op: "gft",
                left: self.eigenvectors.shape(),
                right: (x.len(), 1),
            });
        }
        let u = &self.eigenvectors;
        Ok((0..self.dim())
            .map(|k| (0..self.dim()).map(|i| u[(i, k)] * x[i]).sum())
            .collect())
    }

    /// Inverse transform `x = U x̂`.
    pub fn inverse_gft(&self, x_hat: &[T]) -> Result<Vec<T>> {
        self.eigenvectors.matvec(x_hat)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues.last().copied().unwrap_or_else(T::zero)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eig_sym<T: Scalar>(m: &Dense<T>) -> Result<SpectralDecomposition<T>> {
    let n = m.n_rows();
    let asym = m.max_asymmetry().ok_or(Error::NotSquare {
        rows: m.n_rows(),
        cols: m.n_cols(),
    })?;
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            size: n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let scale = m.max_abs().max(T::one());
    if asym > T::tol(SYMMETRY_TOLERANCE) * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym.as_f64(),
        });
    }

    let mut a = Dense::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)]) * T::lit(0.5));
    let mut v = Dense::identity(n);
    let threshold = T::tol(JACOBI_TOLERANCE) * a.frobenius_norm().max(T::one());

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) < threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) >= threshold {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .partial_cmp(&a[(j, j)])
            .expect("finite eigenvalues")
    });
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = Dense::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm<T: Scalar>(a: &Dense<T>) -> T {
    let n = a.n_rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate<T: Scalar>(a: &mut Dense<T>, v: &mut Dense<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let two = T::lit(2.0);
    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
    let t = if theta.is_infinite() {
        T::zero()
    } else {
        let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
        if theta < T::zero() {
            -t
        } else {
            t
        }
    };
    if t == T::zero() {
        a[(p, q)] = T::zero();
        a[(q, p)] = T::zero();
        return;
    }
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let n = a.n_rows();

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `κ(M + εI) = (λ_max(M) + ε) / ε` for a positive semidefinite `M`.
/// Returns `+∞` when `ε = 0`.
pub fn condition_number<T: Scalar>(m: &CsrMatrix<T>, epsilon: T) -> Result<T> {
    if epsilon < T::zero() || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and nonnegative, got {epsilon}"
        )));
    }
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.n_rows(),
            cols: m.n_cols(),
        });
    }
    let dec = eig_sym(&m.to_dense())?;
    if dec.min_eigenvalue() < -T::lit(1e-6) {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: dec.min_eigenvalue().as_f64(),
        });
    }
    if epsilon == T::zero() {
        return Ok(T::infinity());
    }
    Ok((dec.max_eigenvalue() + epsilon) / epsilon)
}

/// Spectral norm of a symmetric matrix: `max |λ|`.
pub fn spectral_norm_symmetric<T: Scalar>(m: &Dense<T>) -> Result<T> {
    if m.n_rows() == 0 {
        return Ok(T::zero());
    }
    let dec = eig_sym(m)?;
    Ok(dec.min_eigenvalue().abs().max(dec.max_eigenvalue().abs()))
}

/// Spectral norm of any matrix via `sqrt(λ_max(MᵀM))`.
pub fn spectral_norm<T: Scalar>(m: &Dense<T>) -> Result<T> {
    if m.n_rows() == 0 || m.n_cols() == 0 {
        return Ok(T::zero());
    }
    let gram = m.t_matmul(m)?;
    let dec = eig_sym(&gram)?;
    Ok(dec.max_eigenvalue().max(T::zero()).sqrt())
}
