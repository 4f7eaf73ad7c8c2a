//! Perturbation stability of the single-layer simplified model: the exact
//! binomial and first-order bounds, and the randomized SNR sweep.

mod bound;
mod sweep;

pub use bound::{
    hadamard_multiplier, lemma1_elements, lipschitz_constant, perturbation_distance_bound,
    ss2gnn_forward, theorem3_bound, BoundBreakdown, DistanceBound, Lemma1Elements, StabilityInputs,
    BOUND_SLACK,
};
pub use sweep::{stability_sweep, SweepCell, SweepProtocol, SweepResult};
