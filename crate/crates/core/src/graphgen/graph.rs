use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::{CsrMatrix, Dense};

/// Undirected weighted graph with optional node labels and features.
///
/// The adjacency is stored symmetrically with no diagonal and strictly
/// positive weights; every constructor checks this.
#[derive(Clone, Debug)]
pub struct Graph<T> {
    adjacency: CsrMatrix<T>,
    labels: Option<Vec<usize>>,
    features: Option<Dense<T>>,
}

impl<T: Scalar> Graph<T> {
    pub fn new(adjacency: CsrMatrix<T>) -> Result<Self> {
        if !adjacency.is_square() {
            return Err(Error::NotSquare {
                rows: adjacency.n_rows(),
                cols: adjacency.n_cols(),
            });
        }
        if let Some((i, _, _)) = adjacency.iter().find(|&(i, j, _)| i == j) {
            return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
        }
        if let Some((i, j, w)) = adjacency.iter().find(|&(_, _, w)| w <= T::zero()) {
            return Err(Error::InvalidGraph(format!(
                "edge ({i}, {j}) has non-positive weight {w}"
            )));
        }
        if !adjacency.is_symmetric_exact() {
            return Err(Error::InvalidGraph("adjacency is not symmetric".into()));
        }
        Ok(Self {
            adjacency,
            labels: None,
            features: None,
        })
    }

    /// Builds a graph from undirected edges, each listed once.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut triplets = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, j, w) in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) references a node outside 0..{n_nodes}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has invalid weight {w}"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
        Self::new(CsrMatrix::from_triplets(n_nodes, n_nodes, triplets)?)
    }

    pub fn edgeless(n_nodes: usize) -> Self {
        Self {
            adjacency: CsrMatrix::zeros(n_nodes, n_nodes),
            labels: None,
            features: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_nodes() {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n_nodes()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_features(mut self, features: Dense<T>) -> Result<Self> {
        if features.n_rows() != self.n_nodes() {
            return Err(Error::InvalidGraph(format!(
                "{} feature rows for {} nodes",
                features.n_rows(),
                self.n_nodes()
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.adjacency.n_rows()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &CsrMatrix<T> {
        &self.adjacency
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn features(&self) -> Option<&Dense<T>> {
        self.features.as_ref()
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |&m| m + 1))
    }

    /// Weighted degrees `d_i = Σ_j a_ij`.
    pub fn degrees(&self) -> Vec<T> {
        self.adjacency.row_sums()
    }

    pub fn max_degree(&self) -> T {
        self.degrees().into_iter().fold(T::zero(), T::max)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.adjacency.row_iter(i)
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.adjacency.iter().filter(|&(i, j, _)| i < j)
    }

    /// Combinatorial Laplacian `L = D - A`. Diagonal entries are the row sums
    /// of `A` in ascending column order; isolated nodes store no diagonal.
    pub fn laplacian(&self) -> CsrMatrix<T> {
        let n = self.n_nodes();
        let diag = self
            .degrees()
            .into_iter()
            .enumerate()
            .map(|(i, d)| (i, i, d));
        let off = self.adjacency.iter().map(|(i, j, w)| (i, j, -w));
        CsrMatrix::from_triplets(n, n, off.chain(diag)).expect("laplacian stays in bounds")
    }

    /// Relabels nodes so that node `i` becomes node `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes();
        let mut check = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut check[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        if perm.len() != n {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        let mut out = Self::new(self.adjacency.permute_symmetric(perm)?)?;
        if let Some(labels) = &self.labels {
            let mut permuted = vec![0; n];
            for (i, &l) in labels.iter().enumerate() {
                permuted[perm[i]] = l;
            }
            out.labels = Some(permuted);
        }
        out.features = self.features.as_ref().map(|x| x.permute_rows(perm));
        Ok(out)
    }
}
