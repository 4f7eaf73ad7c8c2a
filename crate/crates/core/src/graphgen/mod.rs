//! Graph construction, synthetic generators, the admissible perturbation
//! model, graph metrics and node splits.

mod generators;
mod graph;
pub mod io;
mod metrics;
mod perturb;
mod split;

pub(crate) use generators::seeded_rng;
pub use generators::{
    class_gaussian_features, erdos_renyi, gaussian_matrix, knn_graph, sbm, Bandwidth, WeightDist,
    DEFAULT_KNN_K,
};
pub use graph::Graph;
pub use metrics::{homophily_index, sparsity_percentage, EntryCount, ZERO_TOLERANCE};
pub use perturb::{perturb, Perturbation};
pub use split::{split, SplitMask, SplitSpec};
