use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::{CsrMatrix, Dense};

use super::graph::Graph;

/// Magnitude at or below which an entry counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Anything whose entries can be counted as zero or nonzero.
pub trait EntryCount {
    fn total_entries(&self) -> usize;
    fn nonzero_entries(&self) -> usize;
}

impl<T: Scalar> EntryCount for CsrMatrix<T> {
    fn total_entries(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    fn nonzero_entries(&self) -> usize {
        let tol = T::lit(ZERO_TOLERANCE);
        self.values().iter().filter(|v| v.abs() > tol).count()
    }
}

impl<T: Scalar> EntryCount for Dense<T> {
    fn total_entries(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    fn nonzero_entries(&self) -> usize {
        let tol = T::lit(ZERO_TOLERANCE);
        self.values().iter().filter(|v| v.abs() > tol).count()
    }
}

/// Percentage of zero entries; 0 means completely dense.
pub fn sparsity_percentage(m: &impl EntryCount) -> f64 {
    let total = m.total_entries();
    if total == 0 {
        return 0.0;
    }
    100.0 * (total - m.nonzero_entries()) as f64 / total as f64
}

/// Node homophily: mean over non-isolated nodes of the fraction of
/// neighbours sharing the node's label. Isolated nodes are skipped.
pub fn homophily_index<T: Scalar>(g: &Graph<T>) -> Result<f64> {
    let labels = g.labels().ok_or(Error::MissingLabels)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut isolated = 0usize;
    for (v, &lv) in labels.iter().enumerate() {
        let (same, degree) = g.neighbors(v).fold((0usize, 0usize), |(s, d), (u, _)| {
            (s + usize::from(labels[u] == lv), d + 1)
        });
        if degree == 0 {
            isolated += 1;
            continue;
        }
        total += same as f64 / degree as f64;
        counted += 1;
    }
    if isolated > 0 {
        log::warn!("homophily: skipped {isolated} isolated node(s)");
    }
    if counted == 0 {
        return Err(Error::InvalidGraph(
            "homophily is undefined on a graph without edges".into(),
        ));
    }
    Ok(total / counted as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_percentage(&CsrMatrix::<f64>::identity(10)), 90.0);
        assert_eq!(sparsity_percentage(&Dense::<f64>::filled(5, 5, 0.3)), 0.0);
        let p3 = Graph::<f64>::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let s = sparsity_percentage(p3.adjacency());
        assert!((s - 500.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn homophily_examples() {
        let tri = Graph::<f64>::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let same = tri.clone().with_labels(vec![4, 4, 4]).unwrap();
        assert_eq!(homophily_index(&same).unwrap(), 1.0);
        let mixed = tri.with_labels(vec![0, 0, 1]).unwrap();
        assert!((homophily_index(&mixed).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        // K_{2,3}, sides labelled differently
        let edges = (0..2).flat_map(|i| (2..5).map(move |j| (i, j, 1.0)));
        let bip = Graph::<f64>::from_edges(5, edges)
            .unwrap()
            .with_labels(vec![0, 0, 1, 1, 1])
            .unwrap();
        assert_eq!(homophily_index(&bip).unwrap(), 0.0);
    }

    #[test]
    fn homophily_errors() {
        let g = Graph::<f64>::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
        assert!(matches!(homophily_index(&g), Err(Error::MissingLabels)));
        let empty = Graph::<f64>::edgeless(2).with_labels(vec![0, 1]).unwrap();
        assert!(homophily_index(&empty).is_err());
    }
}
