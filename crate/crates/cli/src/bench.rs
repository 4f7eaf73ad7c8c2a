//! Forward-pass timing and peak memory over a grid of Erdős–Rényi graphs.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use s2gnn::graphgen::{erdos_renyi, gaussian_matrix, Graph, WeightDist};
use s2gnn::neural::{gcn_config, gcn_operator, Fusion, Model, ModelConfig};
use s2gnn::sobolev::{build_shift_bank, ShiftBank};
use s2gnn::sparse_core::Dense;

use crate::memory::{available_memory, MemoryMethod, PeakProbe};

/// Models timed on every grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchModel {
    /// S2-GNN with the configured `α`.
    S2gnn,
    /// S2-GNN with `α = 1`, for the cost comparison against GCN.
    S2gnnAlpha1,
    Gcn,
}

impl BenchModel {
    pub fn label(self) -> &'static str {
        match self {
            BenchModel::S2gnn => "s2gnn",
            BenchModel::S2gnnAlpha1 => "s2gnn_alpha1",
            BenchModel::Gcn => "gcn",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "s2gnn" => Some(BenchModel::S2gnn),
            "s2gnn_alpha1" => Some(BenchModel::S2gnnAlpha1),
            "gcn" => Some(BenchModel::Gcn),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub nodes: Vec<usize>,
    pub p_values: Vec<f64>,
    pub models: Vec<BenchModel>,
    pub repeats: usize,
    pub features: usize,
    pub alpha: usize,
    pub epsilon: f64,
    pub hidden: usize,
    pub classes: usize,
    pub seed: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            nodes: vec![500, 1000, 5000, 10000],
            p_values: vec![0.03, 0.04, 0.05, 0.06],
            models: vec![BenchModel::S2gnn, BenchModel::S2gnnAlpha1, BenchModel::Gcn],
            repeats: 30,
            features: 16,
            alpha: 3,
            epsilon: 1.0,
            hidden: 16,
            classes: 2,
            seed: 0,
        }
    }
}

/// One CSV row. Measurement columns are empty when `status != "ok"`.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub n_nodes: usize,
    pub p: f64,
    pub model: &'static str,
    pub repeats: usize,
    pub stored_entries: Option<usize>,
    pub median_forward_secs: Option<f64>,
    pub mean_forward_secs: Option<f64>,
    pub min_forward_secs: Option<f64>,
    pub peak_memory_bytes: Option<u64>,
    pub memory_method: &'static str,
    pub status: String,
}

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len().is_multiple_of(2) {
        0.5 * (s[m - 1] + s[m])
    } else {
        s[m]
    }
}

/// Rough upper estimate of the bytes one cell needs: edge list, graph,
/// `α` operators and Hadamard intermediates (`α + 4` arrays of `nnz`
/// entries), plus dense activations.
fn estimated_bytes(spec: &BenchSpec, n: usize, p: f64) -> u64 {
    let nnz = n as f64 + p * (n as f64) * (n as f64 - 1.0);
    let operators = nnz * 16.0 * (spec.alpha as f64 + 4.0);
    let dense = (n * spec.features.max(spec.hidden) * 8 * (2 * spec.alpha + 6)) as f64;
    (operators + dense) as u64
}

fn model_config(spec: &BenchSpec, model: BenchModel) -> ModelConfig {
    let base = ModelConfig {
        alpha: spec.alpha,
        epsilon: spec.epsilon,
        fusion: Fusion::Linear,
        dropout: 0.0,
        seed: spec.seed,
        ..ModelConfig::with_widths(2, spec.hidden, spec.classes)
    };
    match model {
        BenchModel::S2gnn => base,
        BenchModel::S2gnnAlpha1 => ModelConfig { alpha: 1, ..base },
        BenchModel::Gcn => gcn_config(&base),
    }
}

fn measure(
    spec: &BenchSpec,
    model: BenchModel,
    g: &Graph<f64>,
    x: &Dense<f64>,
) -> s2gnn::Result<(usize, Vec<f64>)> {
    let config = model_config(spec, model);
    let bank = match model {
        BenchModel::Gcn => ShiftBank::custom(vec![gcn_operator(g)?], 1.0, true)?,
        _ => build_shift_bank(g, config.epsilon, config.alpha)?,
    };
    let net = Model::new(config, x.n_cols())?;
    net.forward(&bank, x)?; // warm-up
    let mut times = Vec::with_capacity(spec.repeats);
    for _ in 0..spec.repeats {
        let t = Instant::now();
        let out = net.forward(&bank, x)?;
        times.push(t.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    Ok((bank.stored_entries(), times))
}

fn cell_seed(seed: u64, n: usize, pi: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((n as u64) << 8) ^ pi as u64
}

/// Runs the grid, calling `on_row` as each row completes. Failures are
/// recorded in the row's `status` and never abort the run.
pub fn run_bench(spec: &BenchSpec, mut on_row: impl FnMut(&BenchRow)) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    let budget = available_memory();
    for &n in &spec.nodes {
        for (pi, &p) in spec.p_values.iter().enumerate() {
            let blank = |model: BenchModel, status: String| BenchRow {
                n_nodes: n,
                p,
                model: model.label(),
                repeats: spec.repeats,
                stored_entries: None,
                median_forward_secs: None,
                mean_forward_secs: None,
                min_forward_secs: None,
                peak_memory_bytes: None,
                memory_method: MemoryMethod::detect().label(),
                status,
            };
            let need = estimated_bytes(spec, n, p);
            let skip = match budget {
                Some(avail) if need > avail / 2 => {
                    Some(format!("skipped: needs ~{need} bytes, {avail} available"))
                }
                _ => None,
            };
            let data = match skip {
                Some(reason) => Err(reason),
                None => catch_unwind(AssertUnwindSafe(|| {
                    let g =
                        erdos_renyi::<f64>(n, p, WeightDist::Unit, cell_seed(spec.seed, n, pi))?;
                    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(spec.seed, n, pi) ^ 1);
                    let x: Dense<f64> = gaussian_matrix(n, spec.features, &mut rng);
                    Ok::<_, s2gnn::Error>((g, x))
                }))
                .map_err(|_| "failed: graph generation panicked".to_string())
                .and_then(|r| r.map_err(|e| format!("failed: {e}"))),
            };
            for &model in &spec.models {
                let row = match &data {
                    Err(reason) => blank(model, reason.clone()),
                    Ok((g, x)) => {
                        let probe = PeakProbe::start();
                        let result = catch_unwind(AssertUnwindSafe(|| measure(spec, model, g, x)));
                        match result {
                            Ok(Ok((entries, times))) => BenchRow {
                                stored_entries: Some(entries),
                                median_forward_secs: Some(median(&times)),
                                mean_forward_secs: Some(
                                    times.iter().sum::<f64>() / times.len() as f64,
                                ),
                                min_forward_secs: times.iter().copied().reduce(f64::min),
                                peak_memory_bytes: probe.finish(),
                                memory_method: probe.method().label(),
                                ..blank(model, "ok".into())
                            },
                            Ok(Err(e)) => blank(model, format!("failed: {e}")),
                            Err(_) => blank(model, "failed: panicked".into()),
                        }
                    }
                };
                log::info!("bench n={n} p={p} {}: {}", row.model, row.status);
                on_row(&row);
                rows.push(row);
            }
        }
    }
    rows
}
