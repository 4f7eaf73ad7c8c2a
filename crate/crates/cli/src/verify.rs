//! Property suites behind `s2gnn verify`.

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use s2gnn::graphgen::{erdos_renyi, gaussian_matrix, Graph, WeightDist};
use s2gnn::neural::{gradient_check, Fusion, Model, ModelConfig};
use s2gnn::sobolev::{build_shift_bank, verify_hadamard_spectrum, SparseSobolevNorm};
use s2gnn::stability::{stability_sweep, SweepProtocol};

use crate::error::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Norm,
    Spectrum,
    Stability,
    Gradients,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Norm => "norm",
            Suite::Spectrum => "spectrum",
            Suite::Stability => "stability",
            Suite::Gradients => "gradients",
            Suite::All => "all",
        }
    }
}

/// One checked property: `measured` must not exceed `limit` (or, for
/// lower bounds, must exceed it; see `comparison`).
#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub cases: usize,
    pub measured: f64,
    pub comparison: &'static str,
    pub limit: f64,
    pub passed: bool,
}

impl PropertyResult {
    fn below(
        suite: &'static str,
        name: &'static str,
        cases: usize,
        measured: f64,
        limit: f64,
    ) -> Self {
        Self {
            suite,
            name,
            cases,
            measured,
            comparison: "<",
            limit,
            passed: measured < limit,
        }
    }

    fn at_most(
        suite: &'static str,
        name: &'static str,
        cases: usize,
        measured: f64,
        limit: f64,
    ) -> Self {
        Self {
            comparison: "<=",
            passed: measured <= limit,
            ..Self::below(suite, name, cases, measured, limit)
        }
    }

    fn above(
        suite: &'static str,
        name: &'static str,
        cases: usize,
        measured: f64,
        limit: f64,
    ) -> Self {
        Self {
            comparison: ">",
            passed: measured > limit,
            ..Self::below(suite, name, cases, measured, limit)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

pub fn run_suite(suite: Suite, seed: u64) -> CliResult<VerifyReport> {
    let mut properties = Vec::new();
    if matches!(suite, Suite::Norm | Suite::All) {
        properties.extend(norm_suite(seed)?);
    }
    if matches!(suite, Suite::Spectrum | Suite::All) {
        properties.extend(spectrum_suite(seed)?);
    }
    if matches!(suite, Suite::Stability | Suite::All) {
        properties.extend(stability_suite(seed)?);
    }
    if matches!(suite, Suite::Gradients | Suite::All) {
        properties.extend(gradient_suite(seed)?);
    }
    Ok(VerifyReport {
        suite,
        seed,
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    gaussian_matrix::<f64, _>(n, 1, rng).into_values()
}

/// Random weighted graph containing the path `0-1-…-(n-1)`.
pub fn connected_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph<f64> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || rng.random::<f64>() < p {
                edges.push((i, j, 1.0 - rng.random::<f64>()));
            }
        }
    }
    Graph::from_edges(n, edges).expect("valid edge list")
}

const NORM_CASES: usize = 1000;
const SEMINORM_CASES: usize = 100;

fn norm_suite(seed: u64) -> CliResult<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut triangle, mut homogeneity, mut min_ratio) = (f64::MIN, 0.0f64, f64::INFINITY);
    let mut positivity_cases = 0;
    for case in 0..NORM_CASES {
        let n = rng.random_range(3..=12);
        let g: Graph<f64> = erdos_renyi(
            n,
            rng.random_range(0.2..0.8),
            WeightDist::Uniform,
            rng.random(),
        )?;
        let eps = [0.5, 1.0, 2.0][case % 3];
        let rho = 1 + (case / 3 % 4) as u32;
        let norm = SparseSobolevNorm::new(&g.laplacian(), eps, rho)?;
        let x = gaussian_vec(n, &mut rng);
        let y = gaussian_vec(n, &mut rng);
        let s: f64 = rng.random_range(-5.0..5.0);
        let (nx, ny) = (norm.norm(&x)?, norm.norm(&y)?);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        triangle = triangle.max(norm.norm(&sum)? - nx - ny);
        let scaled: Vec<f64> = x.iter().map(|v| s * v).collect();
        let expect = s.abs() * nx;
        homogeneity =
            homogeneity.max((norm.norm(&scaled)? - expect).abs() / expect.max(f64::MIN_POSITIVE));
        let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if l2 > 1e-6 {
            positivity_cases += 1;
            min_ratio = min_ratio.min(nx / l2);
        }
    }
    let mut constant = 0.0f64;
    for _ in 0..SEMINORM_CASES {
        let n = rng.random_range(2..=12);
        let g = connected_graph(n, 0.3, &mut rng);
        let c: f64 = rng.random_range(-10.0..10.0);
        let norm = SparseSobolevNorm::new(&g.laplacian(), 0.0, 1)?;
        constant = constant.max(norm.norm(&vec![c; n])?);
    }
    Ok(vec![
        PropertyResult::at_most(
            "norm",
            "triangle_inequality_excess",
            NORM_CASES,
            triangle,
            1e-9,
        ),
        PropertyResult::below(
            "norm",
            "homogeneity_relative_error",
            NORM_CASES,
            homogeneity,
            1e-12,
        ),
        PropertyResult::above(
            "norm",
            "positivity_min_norm_ratio",
            positivity_cases,
            min_ratio,
            0.0,
        ),
        PropertyResult::below(
            "norm",
            "seminorm_constant_vector",
            SEMINORM_CASES,
            constant,
            1e-12,
        ),
    ])
}

const SPECTRUM_GRAPHS: usize = 50;

fn spectrum_suite(seed: u64) -> CliResult<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let mut worst = 0.0f64;
    for i in 0..SPECTRUM_GRAPHS {
        let n = 3 + i % 6;
        let g: Graph<f64> = erdos_renyi(
            n,
            rng.random_range(0.3..0.9),
            WeightDist::Uniform,
            rng.random(),
        )?;
        let l = g.laplacian();
        for rho in [2, 3] {
            worst = worst.max(verify_hadamard_spectrum(&l, rho)?);
        }
    }
    Ok(vec![PropertyResult::below(
        "spectrum",
        "kronecker_reconstruction_max_error",
        2 * SPECTRUM_GRAPHS,
        worst,
        1e-9,
    )])
}

fn stability_suite(seed: u64) -> CliResult<Vec<PropertyResult>> {
    let protocol = SweepProtocol {
        base_seed: seed,
        ..SweepProtocol::default()
    };
    let result = stability_sweep(&protocol)?;
    let cases = result.cells.len() * protocol.seeds;
    let snr = protocol.snrs_db.first().copied().unwrap_or(5.0);
    Ok(vec![
        PropertyResult::at_most(
            "stability",
            "exact_bound_violations",
            cases,
            result.total_violations() as f64,
            0.0,
        ),
        PropertyResult::at_most(
            "stability",
            "output_norm_bound_violations",
            cases,
            result.total_norm_bound_violations() as f64,
            0.0,
        ),
        PropertyResult::at_most(
            "stability",
            "snr_monotonicity_failures",
            result.cells.len(),
            result.snr_monotonicity_failures().len() as f64,
            0.0,
        ),
        PropertyResult::at_most(
            "stability",
            "rho_sensitivity_failures",
            result.cells.len(),
            result.rho_sensitivity_failures(2, 3, snr).len() as f64,
            0.0,
        ),
    ])
}

fn gradient_suite(seed: u64) -> CliResult<Vec<PropertyResult>> {
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0002);
    let g: Graph<f64> = erdos_renyi(n, 0.35, WeightDist::Uniform, rng.random())?;
    let x = gaussian_matrix(n, 4, &mut rng);
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let mask: Vec<bool> = (0..n).map(|i| i % 4 != 3).collect();
    let bank = build_shift_bank(&g, 1.0, 3)?;
    let mut out = Vec::new();
    for (fusion, name) in [
        (Fusion::Linear, "finite_difference_linear"),
        (Fusion::Mlp, "finite_difference_mlp"),
    ] {
        let config = ModelConfig {
            fusion,
            dropout: 0.0,
            seed,
            ..ModelConfig::with_widths(2, 5, 3)
        };
        let mut model = Model::new(config, 4)?;
        for layer in model.layers_mut() {
            for b in &mut layer.biases {
                for v in b.iter_mut() {
                    *v = 0.1 * gaussian_vec(1, &mut rng)[0];
                }
            }
        }
        let check = gradient_check(&model, &bank, &x, &labels, &mask, 1e-5, None)?;
        out.push(PropertyResult::below(
            "gradients",
            name,
            check.entries_checked,
            check.max_relative_error,
            1e-4,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_and_spectrum_suites_pass() {
        let report = run_suite(Suite::Norm, 0).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.properties.len(), 4);
        let report = run_suite(Suite::Spectrum, 1).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn gradient_suite_passes() {
        assert!(run_suite(Suite::Gradients, 3).unwrap().passed);
    }

    #[test]
    fn comparisons() {
        assert!(!PropertyResult::below("s", "p", 1, 1.0, 1.0).passed);
        assert!(PropertyResult::at_most("s", "p", 1, 1.0, 1.0).passed);
        assert!(!PropertyResult::above("s", "p", 1, 0.0, 0.0).passed);
    }
}
