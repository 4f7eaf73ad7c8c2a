use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::{
    compress_with_selector, eig_sym, kronecker, partial_permutation, CsrMatrix, Dense,
};

/// Largest graph the Kronecker oracle accepts (N² × N² intermediates).
pub const SPECTRUM_ORACLE_MAX_NODES: usize = 10;

fn symmetrized<T: Scalar>(m: &Dense<T>) -> Dense<T> {
    let half = T::lit(0.5);
    Dense::from_fn(m.n_rows(), m.n_cols(), |i, j| {
        half * (m[(i, j)] + m[(j, i)])
    })
}

/// Rebuilds the Hadamard power `L^(ρ)` from eigendecompositions alone,
///
/// ```text
/// L^(ρ) = Pᵀ (U ⊗ U_(ρ−1)) (Λ ⊗ Λ_(ρ−1)) (Uᵀ ⊗ U_(ρ−1)ᵀ) P
/// ```
///
/// where `U_(ρ−1)`, `Λ_(ρ−1)` come from the previous level's reconstruction
/// and `P` is the `N² × N` selector of [`partial_permutation`].
pub fn hadamard_power_via_kronecker<T: Scalar>(l: &CsrMatrix<T>, rho: u32) -> Result<Dense<T>> {
    if !l.is_square() {
        let (rows, cols) = l.shape();
        return Err(Error::NotSquare { rows, cols });
    }
    let n = l.n_rows();
    if n > SPECTRUM_ORACLE_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "spectrum oracle supports at most {SPECTRUM_ORACLE_MAX_NODES} nodes, got {n}"
        )));
    }
    if rho == 0 {
        return Err(Error::ZeroPower);
    }
    let base = eig_sym(&l.to_dense())?;
    let p = partial_permutation::<T>(n);
    let mut current = base.reconstruct();
    for _ in 1..rho {
        let prev = eig_sym(&symmetrized(&current))?;
        let u = kronecker(&base.eigenvectors, &prev.eigenvectors)?;
        let lambda: Vec<T> = base
            .eigenvalues
            .iter()
            .flat_map(|&a| prev.eigenvalues.iter().map(move |&b| a * b))
            .collect();
        let u_lambda = Dense::from_fn(u.n_rows(), u.n_cols(), |i, j| u[(i, j)] * lambda[j]);
        let k = u_lambda.matmul_t(&u)?;
        current = compress_with_selector(&p, &k)?;
    }
    Ok(current)
}

/// `‖Kronecker reconstruction − hadamard_power(L, ρ)‖_max`.
pub fn verify_hadamard_spectrum<T: Scalar>(l: &CsrMatrix<T>, rho: u32) -> Result<T> {
    let rebuilt = hadamard_power_via_kronecker(l, rho)?;
    rebuilt.max_abs_diff(&l.hadamard_power(rho)?.to_dense())
}

/// One point of the normalized-spectrum comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rho: u32,
    pub index: usize,
    pub normalized_eig_dense: f64,
    pub normalized_eig_sparse: f64,
}

/// Ascending spectra of `L^ρ` and `L^(ρ)`, each divided by its largest
/// magnitude, for `ρ = 1..=ρ_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct PenalizationCurves {
    pub points: Vec<CurvePoint>,
}

fn normalized_spectrum<T: Scalar>(m: &Dense<T>) -> Result<Vec<f64>> {
    let eig = eig_sym(&symmetrized(m))?;
    let scale = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, &v| acc.max(v.abs()));
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&v| {
            if scale > T::zero() {
                (v / scale).as_f64()
            } else {
                0.0
            }
        })
        .collect())
}

pub fn eigen_penalization_curves<T: Scalar>(
    l: &CsrMatrix<T>,
    rho_max: u32,
) -> Result<PenalizationCurves> {
    if rho_max == 0 {
        return Err(Error::ZeroPower);
    }
    let mut points = Vec::new();
    for rho in 1..=rho_max {
        let dense = normalized_spectrum(&l.matrix_power_dense(rho)?)?;
        let sparse = normalized_spectrum(&l.hadamard_power(rho)?.to_dense())?;
        points.extend(
            dense
                .into_iter()
                .zip(sparse)
                .enumerate()
                .map(|(index, (d, s))| CurvePoint {
                    rho,
                    index,
                    normalized_eig_dense: d,
                    normalized_eig_sparse: s,
                }),
        );
    }
    Ok(PenalizationCurves { points })
}

impl PenalizationCurves {
    /// Mean `|dense − sparse|` over the curve for `rho`; `None` if absent.
    pub fn mean_abs_gap(&self, rho: u32) -> Option<f64> {
        let gaps: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.rho == rho)
            .map(|p| (p.normalized_eig_dense - p.normalized_eig_sparse).abs())
            .collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{erdos_renyi, Graph, WeightDist};

    #[test]
    fn identity_reconstructs_exactly() {
        let l = CsrMatrix::<f64>::identity(5);
        for rho in [2, 3] {
            assert!(verify_hadamard_spectrum(&l, rho).unwrap() < 1e-12);
        }
    }

    #[test]
    fn weighted_er_cube() {
        let g: Graph<f64> = erdos_renyi(6, 0.5, WeightDist::Uniform, 17).unwrap();
        let l = g.laplacian();
        assert!(verify_hadamard_spectrum(&l, 3).unwrap() < 1e-9);
        assert!(verify_hadamard_spectrum(&l, 2).unwrap() < 1e-9);
    }

    #[test]
    fn oracle_refuses_large_graphs() {
        let l = CsrMatrix::<f64>::identity(11);
        assert!(verify_hadamard_spectrum(&l, 2).is_err());
    }

    #[test]
    fn first_order_curves_coincide() {
        let g: Graph<f64> = erdos_renyi(12, 0.4, WeightDist::Uniform, 3).unwrap();
        let curves = eigen_penalization_curves(&g.laplacian(), 3).unwrap();
        assert_eq!(curves.mean_abs_gap(1), Some(0.0));
        assert_eq!(curves.points.len(), 36);
        for rho in 1..=3 {
            let max = curves
                .points
                .iter()
                .filter(|p| p.rho == rho)
                .map(|p| p.normalized_eig_dense)
                .fold(f64::MIN, f64::max);
            assert!((max - 1.0).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        curves.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rho,index,normalized_eig_dense,normalized_eig_sparse\n"));
    }
}
