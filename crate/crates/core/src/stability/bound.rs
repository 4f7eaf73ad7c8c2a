use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphgen::{Graph, Perturbation};
use crate::neural::Activation;
use crate::scalar::Scalar;
use crate::sobolev::sobolev_term;
use crate::sparse_core::{spectral_norm, CsrMatrix, Dense};

/// `σ((L + εI)^(ρ) X W)`, the single-layer simplified model.
pub fn ss2gnn_forward<T: Scalar>(
    l: &CsrMatrix<T>,
    x: &Dense<T>,
    w: &Dense<T>,
    epsilon: T,
    rho: u32,
    activation: Activation,
) -> Result<Dense<T>> {
    let term = sobolev_term(l, epsilon, rho, true)?;
    let op = term.as_sparse().expect("sparse mode");
    Ok(activation.apply(&op.spmm(x)?.matmul(w)?))
}

/// Dense `L^(ρ)` and `L̂^(ρ)` written out entry by entry:
/// off-diagonal `(−1)^ρ a_ij^ρ` and `(−1)^ρ (a_ij + e_ij)^ρ`, diagonal
/// `(d_i + ε)^ρ` and `(d_i + d_ei + ε)^ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Elements<T> {
    pub clean: Dense<T>,
    pub perturbed: Dense<T>,
}

pub fn lemma1_elements<T: Scalar>(
    g: &Graph<T>,
    e: &Perturbation<T>,
    epsilon: T,
    rho: u32,
) -> Result<Lemma1Elements<T>> {
    if rho == 0 {
        return Err(Error::ZeroPower);
    }
    let n = g.n_nodes();
    let p = i32::try_from(rho).map_err(|_| Error::InvalidArgument("power too large".into()))?;
    let sign = if rho.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    };
    let d = g.degrees();
    let de = e.degrees();
    let a = g.adjacency().to_dense();
    let em = e.matrix().to_dense();
    let clean = Dense::from_fn(n, n, |i, j| {
        if i == j {
            (d[i] + epsilon).powi(p)
        } else {
            sign * a[(i, j)].powi(p)
        }
    });
    let perturbed = Dense::from_fn(n, n, |i, j| {
        if i == j {
            (d[i] + de[i] + epsilon).powi(p)
        } else {
            sign * (a[(i, j)] + em[(i, j)]).powi(p)
        }
    });
    Ok(Lemma1Elements { clean, perturbed })
}

/// Largest Euclidean row length.
fn r1<T: Scalar>(m: &Dense<T>) -> T {
    (0..m.n_rows())
        .map(|i| m.row(i).iter().map(|&v| v * v).sum::<T>().sqrt())
        .fold(T::zero(), T::max)
}

/// Largest Euclidean column length.
fn c1<T: Scalar>(m: &Dense<T>) -> T {
    r1(&m.transpose())
}

/// `min(r₁(M), c₁(M))`, the Hadamard-product multiplier of
/// `‖M ∘ B‖ ≤ min(r₁, c₁)(M) ‖B‖`.
pub fn hadamard_multiplier<T: Scalar>(m: &Dense<T>) -> T {
    r1(m).min(c1(m))
}

/// Elementwise power with `M^(0)` the 0/1 support indicator of `M`.
fn dense_hadamard_power<T: Scalar>(m: &Dense<T>, k: u32) -> Dense<T> {
    if k == 0 {
        m.map(|v| if v != T::zero() { T::one() } else { T::zero() })
    } else {
        m.map(|v| v.powi(k as i32))
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Both sides of the Laplacian perturbation distance inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceBound {
    /// `‖L^(ρ) − L̂^(ρ)‖₂`.
    pub exact_lhs_norm: f64,
    /// `Σ_{m=1}^{ρ} C(ρ,m) (η_m ‖E^(m)‖ + (d^max+ε)^{ρ−m} (d_e^max)^m)`.
    pub binomial_rhs: f64,
    /// The `m = 1` term alone.
    pub first_order_rhs: f64,
    /// Per-`m` summands, `m = 1..=ρ`.
    pub binomial_terms: Vec<f64>,
    /// `η_m = min(r₁, c₁)(A^(ρ−m))`, `m = 1..=ρ`.
    pub eta: Vec<f64>,
    /// `‖E^(m)‖₂`, `m = 1..=ρ`.
    pub e_power_norms: Vec<f64>,
    pub d_max: f64,
    /// `max_i |d_ei|`.
    pub de_max: f64,
}

pub fn perturbation_distance_bound<T: Scalar>(
    g: &Graph<T>,
    e: &Perturbation<T>,
    epsilon: T,
    rho: u32,
) -> Result<DistanceBound> {
    let elems = lemma1_elements(g, e, epsilon, rho)?;
    let exact_lhs_norm = spectral_norm(&elems.clean.sub(&elems.perturbed)?)?.as_f64();

    let a = g.adjacency().to_dense();
    let em = e.matrix().to_dense();
    let d_max = g.max_degree().as_f64();
    let de_max = e
        .degrees()
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()))
        .as_f64();
    let base = d_max + epsilon.as_f64();

    let mut binomial_terms = Vec::with_capacity(rho as usize);
    let mut eta = Vec::with_capacity(rho as usize);
    let mut e_power_norms = Vec::with_capacity(rho as usize);
    for m in 1..=rho {
        let eta_m = hadamard_multiplier(&dense_hadamard_power(&a, rho - m)).as_f64();
        let e_norm = spectral_norm(&dense_hadamard_power(&em, m))?.as_f64();
        let diag_part = base.powi((rho - m) as i32) * de_max.powi(m as i32);
        binomial_terms.push(binomial(rho, m) * (eta_m * e_norm + diag_part));
        eta.push(eta_m);
        e_power_norms.push(e_norm);
    }
    Ok(DistanceBound {
        exact_lhs_norm,
        binomial_rhs: binomial_terms.iter().sum(),
        first_order_rhs: binomial_terms[0],
        binomial_terms,
        eta,
        e_power_norms,
        d_max,
        de_max,
    })
}

/// Everything the output-perturbation bound needs.
#[derive(Clone, Debug)]
pub struct StabilityInputs<T> {
    pub graph: Graph<T>,
    pub perturbation: Perturbation<T>,
    pub w: Dense<T>,
    pub w_hat: Dense<T>,
    pub x: Dense<T>,
    pub epsilon: T,
    pub rho: u32,
    pub activation: Activation,
}

impl<T: Scalar> StabilityInputs<T> {
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n_nodes();
        if self.x.n_rows() != n || self.x.n_cols() != self.w.n_rows() {
            return Err(Error::DimensionMismatch {
                op: "stability inputs",
                left: self.x.shape(),
                right: self.w.shape(),
            });
        }
        if self.w.shape() != self.w_hat.shape() {
            return Err(Error::DimensionMismatch {
                op: "stability weights",
                left: self.w.shape(),
                right: self.w_hat.shape(),
            });
        }
        if self.perturbation.matrix().shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                op: "stability perturbation",
                left: (n, n),
                right: self.perturbation.matrix().shape(),
            });
        }
        if self.epsilon < T::zero() || self.rho == 0 {
            return Err(Error::InvalidArgument(
                "need epsilon >= 0 and rho >= 1".into(),
            ));
        }
        Ok(())
    }

    /// `υ = ‖X‖²_F`.
    pub fn upsilon(&self) -> f64 {
        let f = self.x.frobenius_norm().as_f64();
        f * f
    }
}

/// Lipschitz constant of the supported activations.
pub fn lipschitz_constant(activation: Activation) -> f64 {
    match activation {
        Activation::Identity | Activation::Relu => 1.0,
    }
}

/// Output-perturbation bound with its ingredients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundBreakdown {
    /// `‖σ(L^(ρ)XW) − σ(L̂^(ρ)XŴ)‖₂`.
    pub lhs: f64,
    pub rhs_first_order: f64,
    pub rhs_exact_binomial: f64,
    /// `φ sqrt(υ) [(d̂^max+ε)^ρ + ‖Â^(ρ)‖] δ_W`.
    pub weight_term: f64,
    /// `φ sqrt(υ) · first_order_rhs · ‖W‖`.
    pub structure_term_first_order: f64,
    /// `φ sqrt(υ) · binomial_rhs · ‖W‖`.
    pub structure_term_exact: f64,
    pub distance: DistanceBound,
    pub upsilon: f64,
    pub delta_w: f64,
    pub w_norm: f64,
    pub d_hat_max: f64,
    /// `‖Â^(ρ)‖₂`.
    pub a_hat_power_norm: f64,
    /// `‖L̂^(ρ)‖₂` and its bound `(d̂^max+ε)^ρ + ‖Â^(ρ)‖`.
    pub l_hat_norm: f64,
    pub l_hat_norm_bound: f64,
    pub lipschitz: f64,
}

impl BoundBreakdown {
    pub fn exact_holds(&self) -> bool {
        self.lhs <= self.rhs_exact_binomial * (1.0 + BOUND_SLACK)
    }

    pub fn first_order_holds(&self) -> bool {
        self.lhs <= self.rhs_first_order * (1.0 + BOUND_SLACK)
    }

    pub fn l_hat_norm_holds(&self) -> bool {
        self.l_hat_norm <= self.l_hat_norm_bound * (1.0 + BOUND_SLACK)
    }
}

/// Relative rounding allowance when comparing computed norms with bounds.
pub const BOUND_SLACK: f64 = 1e-12;

pub fn theorem3_bound<T: Scalar>(inputs: &StabilityInputs<T>) -> Result<BoundBreakdown> {
    inputs.validate()?;
    let StabilityInputs {
        graph,
        perturbation,
        w,
        w_hat,
        x,
        epsilon,
        rho,
        activation,
    } = inputs;
    let (epsilon, rho) = (*epsilon, *rho);
    let elems = lemma1_elements(graph, perturbation, epsilon, rho)?;
    let y = activation.apply(&elems.clean.matmul(x)?.matmul(w)?);
    let y_hat = activation.apply(&elems.perturbed.matmul(x)?.matmul(w_hat)?);
    let lhs = spectral_norm(&y.sub(&y_hat)?)?.as_f64();

    let distance = perturbation_distance_bound(graph, perturbation, epsilon, rho)?;
    let phi = lipschitz_constant(*activation);
    let upsilon = inputs.upsilon();
    let sqrt_u = upsilon.sqrt();
    let delta_w = spectral_norm(&w.sub(w_hat)?)?.as_f64();
    let w_norm = spectral_norm(w)?.as_f64();

    let a_hat = graph
        .adjacency()
        .to_dense()
        .add(&perturbation.matrix().to_dense())?;
    let a_hat_power_norm = spectral_norm(&dense_hadamard_power(&a_hat, rho))?.as_f64();
    let d = graph.degrees();
    let de = perturbation.degrees();
    let d_hat_max = d
        .iter()
        .zip(&de)
        .fold(T::zero(), |m, (&a, &b)| m.max(a + b))
        .as_f64();
    let l_hat_norm_bound = (d_hat_max + epsilon.as_f64()).powi(rho as i32) + a_hat_power_norm;
    let l_hat_norm = spectral_norm(&elems.perturbed)?.as_f64();

    let weight_term = phi * sqrt_u * l_hat_norm_bound * delta_w;
    let structure_term_first_order = phi * sqrt_u * distance.first_order_rhs * w_norm;
    let structure_term_exact = phi * sqrt_u * distance.binomial_rhs * w_norm;
    Ok(BoundBreakdown {
        lhs,
        rhs_first_order: weight_term + structure_term_first_order,
        rhs_exact_binomial: weight_term + structure_term_exact,
        weight_term,
        structure_term_first_order,
        structure_term_exact,
        distance,
        upsilon,
        delta_w,
        w_norm,
        d_hat_max,
        a_hat_power_norm,
        l_hat_norm,
        l_hat_norm_bound,
        lipschitz: phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{erdos_renyi, gaussian_matrix, perturb, seeded_rng, WeightDist};

    fn single_edge() -> Graph<f64> {
        Graph::from_edges(2, vec![(0, 1, 2.0)]).unwrap()
    }

    #[test]
    fn lemma1_single_edge() {
        let g = single_edge();
        let el = lemma1_elements(&g, &Perturbation::zero(&g), 1.0, 2).unwrap();
        assert_eq!(
            el.clean,
            Dense::from_rows(&[vec![9.0, 4.0], vec![4.0, 9.0]]).unwrap()
        );
        assert_eq!(el.clean, el.perturbed);
        let odd = lemma1_elements(&g, &Perturbation::zero(&g), 1.0, 3).unwrap();
        assert_eq!(odd.clean[(0, 1)], -8.0);
    }

    #[test]
    fn lemma1_matches_the_sparse_builder() {
        for seed in 0..20 {
            let g: Graph<f64> = erdos_renyi(8, 0.4, WeightDist::Uniform, seed).unwrap();
            if g.n_edges() == 0 {
                continue;
            }
            let e = perturb(&g, 10.0, seed).unwrap();
            let el = lemma1_elements(&g, &e, 0.7, 3).unwrap();
            let clean = sobolev_term(&g.laplacian(), 0.7, 3, true)
                .unwrap()
                .to_dense();
            assert_eq!(el.clean, clean);
            let pert = sobolev_term(&e.apply(&g).unwrap().laplacian(), 0.7, 3, true)
                .unwrap()
                .to_dense();
            for (a, b) in el.perturbed.values().iter().zip(pert.values()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_perturbation_gives_zero_bounds() {
        let g: Graph<f64> = erdos_renyi(6, 0.5, WeightDist::Uniform, 2).unwrap();
        let b = perturbation_distance_bound(&g, &Perturbation::zero(&g), 0.5, 3).unwrap();
        assert_eq!(
            (b.exact_lhs_norm, b.binomial_rhs, b.first_order_rhs),
            (0.0, 0.0, 0.0)
        );

        let mut rng = seeded_rng(1);
        let w = gaussian_matrix(4, 2, &mut rng);
        let inputs = StabilityInputs {
            graph: g.clone(),
            perturbation: Perturbation::zero(&g),
            w: w.clone(),
            w_hat: w,
            x: gaussian_matrix(6, 4, &mut rng),
            epsilon: 0.5,
            rho: 2,
            activation: Activation::Relu,
        };
        let bd = theorem3_bound(&inputs).unwrap();
        assert_eq!(
            (bd.lhs, bd.rhs_first_order, bd.rhs_exact_binomial),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn equal_weights_leave_only_the_structure_term() {
        let g: Graph<f64> = erdos_renyi(10, 0.5, WeightDist::Unit, 3).unwrap();
        let mut rng = seeded_rng(4);
        let w = gaussian_matrix(16, 2, &mut rng);
        let inputs = StabilityInputs {
            perturbation: perturb(&g, 20.0, 5).unwrap(),
            graph: g,
            w: w.clone(),
            w_hat: w,
            x: gaussian_matrix(10, 16, &mut rng),
            epsilon: 0.5,
            rho: 2,
            activation: Activation::Identity,
        };
        let bd = theorem3_bound(&inputs).unwrap();
        assert_eq!(bd.weight_term, 0.0);
        assert_eq!(bd.rhs_exact_binomial, bd.structure_term_exact);
        assert!(bd.lhs > 0.0 && bd.exact_holds());
        assert!(bd.l_hat_norm_holds());
    }

    #[test]
    fn ss2gnn_examples() {
        let g: Graph<f64> = erdos_renyi(3, 0.9, WeightDist::Uniform, 6).unwrap();
        let l = g.laplacian();
        let mut rng = seeded_rng(7);
        let x = gaussian_matrix(3, 2, &mut rng);
        let w = gaussian_matrix(2, 2, &mut rng);
        let zero = ss2gnn_forward(&l, &x, &Dense::zeros(2, 2), 1.0, 2, Activation::Relu).unwrap();
        assert_eq!(zero, Dense::zeros(3, 2));
        let plain = ss2gnn_forward(&l, &x, &w, 0.0, 1, Activation::Identity).unwrap();
        let oracle = l.to_dense().matmul(&x).unwrap().matmul(&w).unwrap();
        assert!(plain.max_abs_diff(&oracle).unwrap() < 1e-14);
        let cubic = ss2gnn_forward(&l, &x, &w, 0.4, 3, Activation::Identity).unwrap();
        let k = l.to_dense();
        let k3 = Dense::from_fn(3, 3, |i, j| {
            let v = if i == j { k[(i, j)] + 0.4 } else { k[(i, j)] };
            v * v * v
        });
        let oracle = k3.matmul(&x).unwrap().matmul(&w).unwrap();
        assert!(cubic.max_abs_diff(&oracle).unwrap() < 1e-13);
    }

    #[test]
    fn eta_is_row_length_for_symmetric_matrices() {
        let m = Dense::from_rows(&[
            vec![0.0, 3.0, 4.0],
            vec![3.0, 0.0, 0.0],
            vec![4.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(hadamard_multiplier(&m), 5.0);
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(3, 3), 1.0);
    }
}
