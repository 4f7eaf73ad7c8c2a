//! Graph constructors: k-nearest-neighbour graphs from features and seeded
//! random models (Erdős–Rényi, stochastic block model).

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::Dense;

use super::graph::Graph;

/// Default neighbourhood size for feature graphs.
pub const DEFAULT_KNN_K: usize = 30;

/// Gaussian kernel bandwidth for k-NN graphs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth<T> {
    /// Mean distance to the k-th nearest neighbour.
    Auto,
    Fixed(T),
}

/// Edge weight law for random graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightDist {
    #[default]
    Unit,
    /// Uniform on (0, 1].
    Uniform,
}

impl WeightDist {
    fn sample<T: Scalar, R: Rng>(self, rng: &mut R) -> T {
        match self {
            WeightDist::Unit => T::one(),
            WeightDist::Uniform => T::lit(1.0 - rng.random::<f64>()),
        }
    }
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// k-NN graph with Gaussian weights `exp(-d²/σ²)`, symmetrized by union.
///
/// Ties in distance are broken by node index. Weights that would underflow
/// are clamped to the smallest positive value so every selected edge stays.
pub fn knn_graph<T: Scalar>(x: &Dense<T>, k: usize, bandwidth: Bandwidth<T>) -> Result<Graph<T>> {
    let n = x.n_rows();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 1 <= k < N (k = {k}, N = {n})"
        )));
    }
    let dist = |i: usize, j: usize| -> T {
        x.row(i)
            .iter()
            .zip(x.row(j))
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    };

    let mut pairs = BTreeSet::new();
    let mut kth_sum = T::zero();
    for i in 0..n {
        let mut cand: Vec<(T, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist(i, j), j))
            .collect();
        cand.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });
        kth_sum += cand[k - 1].0;
        for &(_, j) in &cand[..k] {
            pairs.insert((i.min(j), i.max(j)));
        }
    }

    let sigma = match bandwidth {
        Bandwidth::Fixed(s) if s > T::zero() && s.is_finite() => s,
        Bandwidth::Fixed(s) => {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {s}"
            )))
        }
        Bandwidth::Auto => {
            let mean = kth_sum / T::from_usize_lossy(n);
            if mean > T::zero() {
                mean
            } else {
                T::one()
            }
        }
    };
    let edges = pairs.into_iter().map(|(i, j)| {
        let d = dist(i, j);
        let w = (-(d * d) / (sigma * sigma))
            .exp()
            .max(T::min_positive_value());
        (i, j, w)
    });
    Graph::from_edges(n, edges)
}

/// G(N, p): every unordered pair independently with probability `p`.
pub fn erdos_renyi<T: Scalar>(
    n: usize,
    p: f64,
    weights: WeightDist,
    seed: u64,
) -> Result<Graph<T>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "edge probability must lie in (0, 1), got {p}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, weights.sample::<T, _>(&mut rng)));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Stochastic block model with `blocks` equal-size communities; node `i`
/// belongs to block `i / (n / blocks)`, which is also its label.
pub fn sbm<T: Scalar>(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    weights: WeightDist,
    seed: u64,
) -> Result<Graph<T>> {
    if blocks == 0 || !n.is_multiple_of(blocks) {
        return Err(Error::InvalidArgument(format!(
            "{blocks} blocks do not divide {n} nodes"
        )));
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "probability {p} outside [0, 1]"
            )));
        }
    }
    let size = n / blocks;
    let labels: Vec<usize> = (0..n).map(|i| i / size).collect();
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j, weights.sample::<T, _>(&mut rng)));
            }
        }
    }
    Graph::from_edges(n, edges)?.with_labels(labels)
}

/// Node features for labelled synthetic graphs: class `c` is centred at
/// `separation · e_{c mod dim}` with unit Gaussian noise.
pub fn class_gaussian_features<T: Scalar>(
    labels: &[usize],
    dim: usize,
    separation: f64,
    seed: u64,
) -> Dense<T> {
    let mut rng = seeded_rng(seed);
    let mut x = Dense::zeros(labels.len(), dim);
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            let centre = if dim > 0 && c % dim == j {
                separation
            } else {
                0.0
            };
            x[(i, j)] = T::lit(centre + noise);
        }
    }
    x
}

/// Standard normal matrix.
pub fn gaussian_matrix<T: Scalar, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Dense<T> {
    Dense::from_fn(rows, cols, |_, _| {
        T::lit(rng.sample::<f64, _>(StandardNormal))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_collinear_points() {
        // 0 and 1 pick each other; 10 picks 1
        let x = Dense::from_rows(&[vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        let g = knn_graph(&x, 1, Bandwidth::Auto).unwrap();
        let edges: Vec<_> = g.edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_full_neighbourhood_is_complete() {
        let x = Dense::from_rows(&[
            vec![0.0, 1.0],
            vec![2.0, 0.5],
            vec![-1.0, 3.0],
            vec![0.2, 0.2],
        ])
        .unwrap();
        let g = knn_graph(&x, 3, Bandwidth::Auto).unwrap();
        assert_eq!(g.n_edges(), 6);
    }

    #[test]
    fn knn_duplicates_get_unit_weight() {
        let x = Dense::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![5.0, 5.0]]).unwrap();
        let g = knn_graph(&x, 1, Bandwidth::Fixed(1.0)).unwrap();
        assert_eq!(g.adjacency().get(0, 1), 1.0);
    }

    #[test]
    fn knn_rejects_large_k() {
        let x = Dense::<f64>::zeros(3, 1);
        assert!(knn_graph(&x, 3, Bandwidth::Auto).is_err());
    }

    #[test]
    fn er_is_deterministic_and_trivial_cases_hold() {
        let a: Graph<f64> = erdos_renyi(2, 0.5, WeightDist::Unit, 7).unwrap();
        let b: Graph<f64> = erdos_renyi(2, 0.5, WeightDist::Unit, 7).unwrap();
        assert_eq!(a.adjacency(), b.adjacency());
        let single: Graph<f64> = erdos_renyi(1, 0.5, WeightDist::Unit, 1).unwrap();
        assert_eq!(single.n_edges(), 0);
        assert!(erdos_renyi::<f64>(5, 1.0, WeightDist::Unit, 1).is_err());
        assert!(erdos_renyi::<f64>(5, 0.0, WeightDist::Unit, 1).is_err());
    }

    #[test]
    fn er_uniform_weights_lie_in_unit_interval() {
        let g: Graph<f64> = erdos_renyi(40, 0.3, WeightDist::Uniform, 3).unwrap();
        assert!(g.edges().all(|(_, _, w)| w > 0.0 && w <= 1.0));
    }

    #[test]
    fn sbm_blocks_and_labels() {
        let g: Graph<f64> = sbm(12, 3, 0.9, 0.0, WeightDist::Unit, 5).unwrap();
        let labels = g.labels().unwrap();
        assert_eq!(labels, &[0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        assert!(g.edges().all(|(i, j, _)| labels[i] == labels[j]));
        assert!(sbm::<f64>(10, 3, 0.5, 0.1, WeightDist::Unit, 0).is_err());
    }
}
