use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphgen::{erdos_renyi, gaussian_matrix, perturb, seeded_rng, Graph, WeightDist};
use crate::neural::Activation;
use crate::sparse_core::Dense;

use super::bound::{theorem3_bound, StabilityInputs};

/// Grid and sizes of the empirical stability experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepProtocol {
    pub rhos: Vec<u32>,
    pub p_values: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub snrs_db: Vec<f64>,
    pub n_nodes: usize,
    pub f_in: usize,
    pub f_out: usize,
    pub seeds: usize,
    pub base_seed: u64,
    pub activation: Activation,
    /// Perturb `W` at the same SNR as the graph; otherwise `Ŵ = W`.
    pub perturb_weights: bool,
}

impl Default for SweepProtocol {
    fn default() -> Self {
        Self {
            rhos: vec![2, 3],
            p_values: vec![0.1, 0.3, 0.5],
            epsilons: vec![0.5, 5.0, 10.0],
            snrs_db: vec![5.0, 10.0, 20.0, 30.0, 40.0],
            n_nodes: 10,
            f_in: 16,
            f_out: 2,
            seeds: 100,
            base_seed: 0,
            activation: Activation::Relu,
            perturb_weights: true,
        }
    }
}

/// Aggregates of one grid cell over all seeds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub rho: u32,
    pub p_er: f64,
    pub epsilon: f64,
    pub snr_db: f64,
    pub mean_lhs: f64,
    pub std_lhs: f64,
    pub mean_rhs_fo: f64,
    pub mean_rhs_exact: f64,
    /// Seeds where the exact bound fails.
    pub violations: usize,
    /// Seeds where the first-order value is below the observed distance
    /// (informational; the first-order bound omits higher-order terms).
    pub fo_violations: usize,
    /// Seeds where `‖L̂^(ρ)‖ ≤ (d̂^max+ε)^ρ + ‖Â^(ρ)‖` fails.
    pub norm_bound_violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub protocol: SweepProtocol,
    pub cells: Vec<SweepCell>,
}

fn mix(parts: &[u64]) -> u64 {
    // splitmix64 finalizer folded over the parts
    parts.iter().fold(0x243f_6a88_85a3_08d3, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

/// Unit-weight ER graph with at least one edge; empty draws are redrawn
/// with the next attempt index.
fn sample_graph(n: usize, p: f64, base: u64, seed_index: u64, p_index: u64) -> Result<Graph<f64>> {
    for attempt in 0..10_000u64 {
        let g = erdos_renyi(
            n,
            p,
            WeightDist::Unit,
            mix(&[base, seed_index, p_index, attempt, 1]),
        )?;
        if g.n_edges() > 0 {
            return Ok(g);
        }
    }
    Err(Error::InvalidGraph(format!(
        "no edges after 10000 draws of ER({n}, {p})"
    )))
}

/// Standard normal features with every column scaled to unit length.
fn normalized_features(n: usize, f: usize, seed: u64) -> Dense<f64> {
    let mut x = gaussian_matrix(n, f, &mut seeded_rng(seed));
    for j in 0..f {
        let norm = x.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..n {
                x[(i, j)] /= norm;
            }
        }
    }
    x
}

/// `W + Δ` with a fixed Gaussian direction scaled so `‖W‖_F/‖Δ‖_F`
/// equals `snr_db`.
fn perturb_weights(w: &Dense<f64>, snr_db: f64, seed: u64) -> Dense<f64> {
    let mut rng = seeded_rng(seed);
    let noise = Dense::from_fn(w.n_rows(), w.n_cols(), |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    });
    let scale = w.frobenius_norm() / (noise.frobenius_norm() * 10f64.powf(snr_db / 20.0));
    let mut out = w.clone();
    out.add_scaled_assign(scale, &noise).expect("same shape");
    out
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs the full grid. For a given seed index the graph, features, weights
/// and noise directions are shared by every `(ρ, ε, SNR)` cell, so trends
/// across the grid are not masked by resampling.
pub fn stability_sweep(protocol: &SweepProtocol) -> Result<SweepResult> {
    if protocol.seeds == 0 || protocol.n_nodes < 2 {
        return Err(Error::InvalidArgument(
            "need at least one seed and two nodes".into(),
        ));
    }
    let base = protocol.base_seed;
    let mut cells = Vec::new();
    for &rho in &protocol.rhos {
        for (pi, &p) in protocol.p_values.iter().enumerate() {
            let graphs: Vec<Graph<f64>> = (0..protocol.seeds as u64)
                .map(|s| sample_graph(protocol.n_nodes, p, base, s, pi as u64))
                .collect::<Result<_>>()?;
            for &epsilon in &protocol.epsilons {
                for &snr_db in &protocol.snrs_db {
                    let mut lhs = Vec::with_capacity(protocol.seeds);
                    let mut rhs_fo = Vec::with_capacity(protocol.seeds);
                    let mut rhs_exact = Vec::with_capacity(protocol.seeds);
                    let (mut violations, mut fo_violations, mut norm_bound_violations) = (0, 0, 0);
                    for (s, g) in graphs.iter().enumerate() {
                        let s = s as u64;
                        let x = normalized_features(
                            protocol.n_nodes,
                            protocol.f_in,
                            mix(&[base, s, 2]),
                        );
                        let w = gaussian_matrix(
                            protocol.f_in,
                            protocol.f_out,
                            &mut seeded_rng(mix(&[base, s, 3])),
                        );
                        let w_hat = if protocol.perturb_weights {
                            perturb_weights(&w, snr_db, mix(&[base, s, 4]))
                        } else {
                            w.clone()
                        };
                        let inputs = StabilityInputs {
                            graph: g.clone(),
                            perturbation: perturb(g, snr_db, mix(&[base, s, pi as u64, 5]))?,
                            w,
                            w_hat,
                            x,
                            epsilon,
                            rho,
                            activation: protocol.activation,
                        };
                        let b = theorem3_bound(&inputs)?;
                        violations += usize::from(!b.exact_holds());
                        fo_violations += usize::from(!b.first_order_holds());
                        norm_bound_violations += usize::from(!b.l_hat_norm_holds());
                        lhs.push(b.lhs);
                        rhs_fo.push(b.rhs_first_order);
                        rhs_exact.push(b.rhs_exact_binomial);
                    }
                    let (mean_lhs, std_lhs) = mean_std(&lhs);
                    if violations > 0 {
                        log::warn!("rho={rho} p={p} eps={epsilon} snr={snr_db}: {violations} exact-bound violations");
                    }
                    cells.push(SweepCell {
                        rho,
                        p_er: p,
                        epsilon,
                        snr_db,
                        mean_lhs,
                        std_lhs,
                        mean_rhs_fo: mean_std(&rhs_fo).0,
                        mean_rhs_exact: mean_std(&rhs_exact).0,
                        violations,
                        fo_violations,
                        norm_bound_violations,
                    });
                }
            }
        }
    }
    Ok(SweepResult {
        protocol: protocol.clone(),
        cells,
    })
}

impl SweepResult {
    pub fn total_violations(&self) -> usize {
        self.cells.iter().map(|c| c.violations).sum()
    }

    pub fn total_norm_bound_violations(&self) -> usize {
        self.cells.iter().map(|c| c.norm_bound_violations).sum()
    }

    fn cell(&self, rho: u32, p: f64, epsilon: f64, snr: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.rho == rho && c.p_er == p && c.epsilon == epsilon && c.snr_db == snr)
    }

    /// `(ρ, p, ε)` families whose mean LHS increases somewhere along
    /// ascending SNR.
    pub fn snr_monotonicity_failures(&self) -> Vec<(u32, f64, f64)> {
        let pr = &self.protocol;
        let mut snrs = pr.snrs_db.clone();
        snrs.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for &rho in &pr.rhos {
            for &p in &pr.p_values {
                for &eps in &pr.epsilons {
                    let means: Vec<f64> = snrs
                        .iter()
                        .filter_map(|&s| self.cell(rho, p, eps, s).map(|c| c.mean_lhs))
                        .collect();
                    if means.windows(2).any(|w| w[1] > w[0]) {
                        out.push((rho, p, eps));
                    }
                }
            }
        }
        out
    }

    /// `(p, ε)` pairs where the mean LHS at `rho_high` is below the one at
    /// `rho_low` for the given SNR.
    pub fn rho_sensitivity_failures(
        &self,
        rho_low: u32,
        rho_high: u32,
        snr: f64,
    ) -> Vec<(f64, f64)> {
        let pr = &self.protocol;
        let mut out = Vec::new();
        for &p in &pr.p_values {
            for &eps in &pr.epsilons {
                if let (Some(lo), Some(hi)) = (
                    self.cell(rho_low, p, eps, snr),
                    self.cell(rho_high, p, eps, snr),
                ) {
                    if hi.mean_lhs < lo.mean_lhs {
                        out.push((p, eps));
                    }
                }
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }
}
