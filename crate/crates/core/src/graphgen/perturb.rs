//! Edge-weight perturbations `Â = A + E` constrained to the admissible set:
//! `E` symmetric, zero diagonal, `|e_ij| ≤ a_ij` (so no new edges, no
//! negative weights, no self-loops).

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::CsrMatrix;

use super::generators::seeded_rng;
use super::graph::Graph;

#[derive(Clone, Debug)]
pub struct Perturbation<T> {
    matrix: CsrMatrix<T>,
    snr_db: f64,
    achieved_snr_db: f64,
}

impl<T: Scalar> Perturbation<T> {
    /// Wraps an error matrix after checking it is admissible for `base`.
    pub fn new(base: &Graph<T>, matrix: CsrMatrix<T>, snr_db: f64) -> Result<Self> {
        let a = base.adjacency();
        if matrix.shape() != a.shape() {
            return Err(Error::DimensionMismatch {
                op: "perturbation",
                left: a.shape(),
                right: matrix.shape(),
            });
        }
        for (i, j, e) in matrix.iter() {
            if i == j {
                return Err(Error::InvalidGraph(format!(
                    "perturbation on diagonal at {i}"
                )));
            }
            let aij = a.get(i, j);
            if e.abs() > aij {
                return Err(Error::InvalidGraph(format!(
                    "|e_{i}{j}| = {} exceeds a_{i}{j} = {aij}",
                    e.abs()
                )));
            }
        }
        if !matrix.is_symmetric_exact() {
            return Err(Error::InvalidGraph("perturbation is not symmetric".into()));
        }
        let achieved_snr_db = snr_of(a, &matrix);
        Ok(Self {
            matrix,
            snr_db,
            achieved_snr_db,
        })
    }

    pub fn zero(base: &Graph<T>) -> Self {
        let n = base.n_nodes();
        Self {
            matrix: CsrMatrix::zeros(n, n),
            snr_db: f64::INFINITY,
            achieved_snr_db: f64::INFINITY,
        }
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    /// Requested SNR in dB.
    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// `10·log10(‖A‖_F² / ‖E‖_F²)` after projection.
    pub fn achieved_snr_db(&self) -> f64 {
        self.achieved_snr_db
    }

    /// Degrees of the error matrix, `d_{e_i} = Σ_j e_ij`.
    pub fn degrees(&self) -> Vec<T> {
        self.matrix.row_sums()
    }

    /// Perturbed graph with adjacency `A + E`; edges driven to zero vanish.
    pub fn apply(&self, base: &Graph<T>) -> Result<Graph<T>> {
        let a = base.adjacency();
        let sum =
            CsrMatrix::from_triplets(a.n_rows(), a.n_cols(), a.iter().chain(self.matrix.iter()))?;
        Graph::new(sum)
    }
}

fn frobenius_sq<T: Scalar>(m: &CsrMatrix<T>) -> f64 {
    m.values().iter().map(|v| v.as_f64() * v.as_f64()).sum()
}

fn snr_of<T: Scalar>(a: &CsrMatrix<T>, e: &CsrMatrix<T>) -> f64 {
    let noise = frobenius_sq(e);
    if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (frobenius_sq(a) / noise).log10()
    }
}

/// Gaussian edge noise scaled to `snr_db`, then projected into the
/// admissible set: symmetrized, zero diagonal, each `e_ij` clamped to
/// `[-a_ij, a_ij]`. `snr_db = +∞` yields `E = 0`.
pub fn perturb<T: Scalar>(g: &Graph<T>, snr_db: f64, seed: u64) -> Result<Perturbation<T>> {
    if g.n_edges() == 0 {
        return Err(Error::InvalidGraph(
            "cannot perturb an edgeless graph".into(),
        ));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("SNR is NaN".into()));
    }
    let mut rng = seeded_rng(seed);
    let edges: Vec<(usize, usize, T)> = g.edges().collect();
    let raw: Vec<f64> = edges.iter().map(|_| rng.sample(StandardNormal)).collect();

    // both triangles count toward the Frobenius norms
    let a_fro = frobenius_sq(g.adjacency()).sqrt();
    let raw_fro = (2.0 * raw.iter().map(|z| z * z).sum::<f64>()).sqrt();
    let scale = if raw_fro == 0.0 {
        0.0
    } else {
        a_fro / (raw_fro * 10f64.powf(snr_db / 20.0))
    };

    let mut triplets = Vec::with_capacity(2 * edges.len());
    for (&(i, j, a), z) in edges.iter().zip(&raw) {
        let e = T::lit(z * scale).max(-a).min(a);
        triplets.push((i, j, e));
        triplets.push((j, i, e));
    }
    let n = g.n_nodes();
    let matrix = CsrMatrix::from_triplets(n, n, triplets)?;
    Perturbation::new(g, matrix, snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{erdos_renyi, WeightDist};

    fn admissible(g: &Graph<f64>, p: &Perturbation<f64>) -> bool {
        let e = p.matrix();
        e.is_symmetric_exact()
            && e.iter()
                .all(|(i, j, v)| i != j && v.abs() <= g.adjacency().get(i, j))
    }

    #[test]
    fn infinite_snr_gives_zero_perturbation() {
        let g: Graph<f64> = erdos_renyi(10, 0.4, WeightDist::Uniform, 1).unwrap();
        let p = perturb(&g, f64::INFINITY, 3).unwrap();
        assert_eq!(p.matrix().nnz(), 0);
        assert_eq!(p.achieved_snr_db(), f64::INFINITY);
    }

    #[test]
    fn clamping_bounds_each_entry() {
        // very low SNR forces the clamp on a light edge
        let g = Graph::from_edges(3, vec![(0, 1, 0.1), (1, 2, 50.0)]).unwrap();
        for seed in 0..20 {
            let p = perturb(&g, -40.0, seed).unwrap();
            assert!(admissible(&g, &p));
            assert_eq!(p.matrix().get(0, 1).abs(), 0.1);
        }
    }

    #[test]
    fn projection_only_shrinks_the_noise() {
        for seed in 0..100 {
            let g: Graph<f64> = erdos_renyi(12, 0.4, WeightDist::Uniform, seed).unwrap();
            if g.n_edges() == 0 {
                continue;
            }
            let snr = 5.0;
            let p = perturb(&g, snr, seed + 1000).unwrap();
            assert!(admissible(&g, &p));
            let a_fro = frobenius_sq(g.adjacency()).sqrt();
            let e_fro = frobenius_sq(p.matrix()).sqrt();
            assert!(e_fro <= a_fro * 10f64.powf(-snr / 20.0) * (1.0 + 1e-12));
            assert!(p.achieved_snr_db() >= snr - 1e-9);
        }
    }

    #[test]
    fn unclamped_noise_hits_the_requested_snr() {
        let g: Graph<f64> = erdos_renyi(20, 0.5, WeightDist::Unit, 2).unwrap();
        let p = perturb(&g, 40.0, 9).unwrap();
        assert!((p.achieved_snr_db() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn apply_keeps_graph_valid_and_rejects_edgeless_input() {
        let g = Graph::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
        let e = CsrMatrix::from_triplets(2, 2, vec![(0, 1, -1.0), (1, 0, -1.0)]).unwrap();
        let p = Perturbation::new(&g, e, 0.0).unwrap();
        assert_eq!(p.apply(&g).unwrap().n_edges(), 0);

        let too_big = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        assert!(Perturbation::new(&g, too_big, 0.0).is_err());
        assert!(perturb(&Graph::<f64>::edgeless(3), 10.0, 0).is_err());
    }
}
