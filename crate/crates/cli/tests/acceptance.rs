//! Acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use s2gnn::graphgen::{
    class_gaussian_features, erdos_renyi, gaussian_matrix, sbm, sparsity_percentage, split, Graph,
    SplitMask, SplitSpec, WeightDist,
};
use s2gnn::neural::{
    gcn_layer, gcn_operator, gradient_check, log_softmax, train, train_gcn_baseline, Activation,
    Fusion, Model, ModelConfig, TrainReport, Variant,
};
use s2gnn::sobolev::{build_shift_bank, sobolev_term, verify_hadamard_spectrum, SparseSobolevNorm};
use s2gnn::sparse_core::{condition_number, CsrMatrix, Dense};
use s2gnn::stability::{stability_sweep, SweepProtocol};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type SbmTask = (Graph<f64>, Dense<f64>, Vec<usize>, SplitMask);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    check(took < limit, || {
        format!("{detail}; took {took:?}, limit {limit:?}")
    })?;
    Ok(format!("{detail}; {:.2}s", took.as_secs_f64()))
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Entrywise power of a dense copy, independent of the CSR kernels.
fn dense_entrywise_power(m: &Dense<f64>, rho: u32) -> Dense<f64> {
    m.map(|v| v.powi(rho as i32))
}

fn spectrum_oracle() -> Outcome {
    timed(Duration::from_secs(30), || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst = 0.0f64;
        for i in 0..50 {
            let n = 3 + i % 6;
            let g: Graph<f64> = ok(erdos_renyi(
                n,
                rng.random_range(0.3..0.9),
                WeightDist::Uniform,
                rng.random(),
            ))?;
            let l = g.laplacian();
            for rho in [2, 3] {
                let err = ok(verify_hadamard_spectrum(&l, rho))?;
                // the reference Hadamard power itself against a dense loop
                let direct = ok(l.hadamard_power(rho))?.to_dense();
                let by_hand = dense_entrywise_power(&l.to_dense(), rho);
                check(ok(direct.max_abs_diff(&by_hand))? < 1e-12, || {
                    format!("graph {i}: Hadamard kernel")
                })?;
                check(err < 1e-9, || {
                    format!("graph {i}, rho {rho}: error {err:e}")
                })?;
                worst = worst.max(err);
            }
        }
        Ok(format!("100 reconstructions, max error {worst:.2e} < 1e-9"))
    })
}

fn norm_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut tri, mut hom, mut oracle) = (f64::MIN, 0.0f64, 0.0f64);
    for case in 0..1000 {
        let n = rng.random_range(3..=12);
        let g: Graph<f64> = ok(erdos_renyi(
            n,
            rng.random_range(0.2..0.8),
            WeightDist::Uniform,
            rng.random(),
        ))?;
        let eps = [0.5, 1.0, 2.0][case % 3];
        let rho = 1 + (case / 3 % 4) as u32;
        let l = g.laplacian();
        let norm = ok(SparseSobolevNorm::new(&l, eps, rho))?;
        let x = gaussian_matrix::<f64, _>(n, 1, &mut rng).into_values();
        let y = gaussian_matrix::<f64, _>(n, 1, &mut rng).into_values();
        let s: f64 = rng.random_range(-5.0..5.0);
        let (nx, ny) = (ok(norm.norm(&x))?, ok(norm.norm(&y))?);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let excess = ok(norm.norm(&sum))? - nx - ny;
        check(excess <= 1e-9, || {
            format!("case {case}: triangle excess {excess:e}")
        })?;
        tri = tri.max(excess);
        let scaled: Vec<f64> = x.iter().map(|v| s * v).collect();
        let rel = (ok(norm.norm(&scaled))? - s.abs() * nx).abs() / (s.abs() * nx);
        check(rel < 1e-12, || format!("case {case}: homogeneity {rel:e}"))?;
        hom = hom.max(rel);
        let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        check(l2 <= 1e-6 || nx > 0.0, || {
            format!("case {case}: zero norm of nonzero x")
        })?;
        // independent quadratic form over a dense entrywise power
        let k = dense_entrywise_power(&ok(l.add_identity(eps))?.to_dense(), rho);
        let kx = ok(k.matvec(&x))?;
        let q: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
        let gap = (q.sqrt() - nx).abs() / nx.max(1e-300);
        check(gap < 1e-9, || {
            format!("case {case}: dense oracle gap {gap:e}")
        })?;
        oracle = oracle.max(gap);
    }
    let mut constant = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || rng.random::<f64>() < 0.3 {
                    edges.push((i, j, 1.0 - rng.random::<f64>()));
                }
            }
        }
        let g = ok(Graph::from_edges(n, edges))?;
        let c: f64 = rng.random_range(-10.0..10.0);
        constant =
            constant
                .max(ok(SparseSobolevNorm::new(&g.laplacian(), 0.0, 1)
                    .and_then(|m| m.norm(&vec![c; n])))?);
    }
    check(constant < 1e-12, || {
        format!("constant vector semi-norm {constant:e}")
    })?;
    Ok(format!(
        "1000 cases: triangle excess {tri:.2e} <= 1e-9, homogeneity {hom:.2e} < 1e-12, \
         dense-oracle gap {oracle:.2e}; constants {constant:.1e}"
    ))
}

fn sparsity_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut graphs: Vec<Graph<f64>> = vec![
        Graph::edgeless(5),
        ok(Graph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]))?,
    ];
    for _ in 0..40 {
        let n = rng.random_range(3..40);
        graphs.push(ok(erdos_renyi(
            n,
            rng.random_range(0.05..0.6),
            WeightDist::Uniform,
            rng.random(),
        ))?);
    }
    let mut checked = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for eps in [0.5, 1.0, 2.0] {
            let pattern = ok(g.adjacency().add_identity(eps))?;
            for rho in 1..=6 {
                for m in [g.adjacency().clone(), g.laplacian()] {
                    let term = ok(sobolev_term(&m, eps, rho, true))?;
                    let stored = term.as_sparse().expect("sparse term");
                    check(stored.same_pattern(&pattern), || {
                        format!("graph {gi}, eps {eps}, rho {rho}: pattern differs")
                    })?;
                    checked += 1;
                }
            }
        }
    }
    let p3 = &graphs[1].laplacian();
    let dense = ok(sobolev_term(p3, 1.0, 2, false))?.to_dense();
    let sparse = ok(sobolev_term(p3, 1.0, 2, true))?;
    let (ds, ss) = (
        sparsity_percentage(&dense),
        sparsity_percentage(sparse.as_sparse().unwrap()),
    );
    check(ds < ss, || format!("P3: dense {ds}% vs sparse {ss}%"))?;
    Ok(format!(
        "{checked} patterns identical; P3 rho=2 sparsity dense {ds:.1}% < sparse {ss:.1}%"
    ))
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration and a
/// final Rayleigh quotient.
fn lambda_max_power(m: &CsrMatrix<f64>) -> f64 {
    let n = m.n_rows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
    for _ in 0..20_000 {
        let w = m.spmv(&v).unwrap();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|a| a / norm).collect();
    }
    let w = m.spmv(&v).unwrap();
    v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|a| a * a).sum::<f64>()
}

fn condition_numbers() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = rng.random_range(2..=50);
        let g: Graph<f64> = ok(erdos_renyi(
            n,
            rng.random_range(0.05..0.7),
            WeightDist::Uniform,
            rng.random(),
        ))?;
        let l = g.laplacian();
        let lmax = lambda_max_power(&l);
        for eps in [0.5, 1.0, 2.0] {
            let want = (lmax + eps) / eps;
            let got = ok(condition_number(&l, eps))?;
            let rel = (got - want).abs() / want;
            check(rel < 1e-8, || {
                format!("graph {i}, eps {eps}: {got} vs {want}")
            })?;
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "300 evaluations, max relative error {worst:.2e} < 1e-8"
    ))
}

fn gcn_equivalence() -> Outcome {
    let g: Graph<f64> = ok(erdos_renyi(25, 0.2, WeightDist::Uniform, 5))?;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let x: Dense<f64> = gaussian_matrix(25, 6, &mut rng);
    let bank = ok(build_shift_bank(&g, 1.0, 1))?;
    // Â assembled densely from the definition
    let a_tilde = ok(g.adjacency().add_identity(1.0))?.to_dense();
    let d: Vec<f64> = (0..25)
        .map(|i| a_tilde.row(i).iter().sum::<f64>())
        .collect();
    let a_hat = CsrMatrix::from_dense(
        &Dense::from_fn(25, 25, |i, j| a_tilde[(i, j)] / (d[i] * d[j]).sqrt()),
        0.0,
    );
    let engine_op = ok(gcn_operator(&g))?;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let cfg = ModelConfig {
            alpha: 1,
            epsilon: 1.0,
            fusion: Fusion::Disabled,
            seed,
            ..ModelConfig::with_widths(2, 8, 3)
        };
        let model = ok(Model::new(cfg, 6))?;
        for op in [&a_hat, &engine_op] {
            let mut h = x.clone();
            for (l, layer) in model.layers().iter().enumerate() {
                let act = if l + 1 == model.layers().len() {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                h = ok(gcn_layer(op, &h, &layer.weights[0], act))?;
            }
            let diff = ok(ok(model.forward(&bank, &x))?.max_abs_diff(&log_softmax(&h)))?;
            check(diff < 1e-12, || format!("draw {seed}: max-abs {diff:e}"))?;
            worst = worst.max(diff);
        }
    }
    Ok(format!(
        "20 weight draws, max-abs difference {worst:.2e} < 1e-12"
    ))
}

fn gradients() -> Outcome {
    timed(Duration::from_secs(60), || {
        let n = 12;
        let g: Graph<f64> = ok(erdos_renyi(n, 0.35, WeightDist::Uniform, 606))?;
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let x = gaussian_matrix(n, 4, &mut rng);
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let mask: Vec<bool> = (0..n).map(|i| i % 4 != 3).collect();
        let bank = ok(build_shift_bank(&g, 1.0, 3))?;
        let mut parts = Vec::new();
        for fusion in [Fusion::Linear, Fusion::Mlp] {
            let cfg = ModelConfig {
                fusion,
                dropout: 0.0,
                weight_decay: 5e-3,
                seed: 7,
                ..ModelConfig::with_widths(2, 5, 3)
            };
            let mut model = ok(Model::new(cfg, 4))?;
            for layer in model.layers_mut() {
                for b in &mut layer.biases {
                    for v in b.iter_mut() {
                        *v = 0.1 * gaussian_matrix::<f64, _>(1, 1, &mut rng)[(0, 0)];
                    }
                }
            }
            let c = ok(gradient_check(
                &model, &bank, &x, &labels, &mask, 1e-5, None,
            ))?;
            check(c.max_relative_error < 1e-4, || format!("{fusion}: {c:?}"))?;
            parts.push(format!(
                "{fusion} {:.2e} over {} entries",
                c.max_relative_error, c.entries_checked
            ));
        }
        Ok(format!("max relative error {} (< 1e-4)", parts.join(", ")))
    })
}

fn stability() -> Outcome {
    timed(Duration::from_secs(600), || {
        let protocol = SweepProtocol::default();
        check(protocol.seeds == 100 && protocol.n_nodes == 10, || {
            "protocol is not the full grid".into()
        })?;
        let result = ok(stability_sweep(&protocol))?;
        check(result.cells.len() == 2 * 3 * 3 * 5, || {
            format!("{} cells", result.cells.len())
        })?;
        let v = result.total_violations();
        check(v == 0, || format!("{v} exact-bound violations"))?;
        let mono = result.snr_monotonicity_failures();
        check(mono.is_empty(), || {
            format!("SNR monotonicity failures {mono:?}")
        })?;
        let rho = result.rho_sensitivity_failures(2, 3, 5.0);
        check(rho.is_empty(), || {
            format!("rho sensitivity failures {rho:?}")
        })?;
        Ok(format!(
            "{} cells x 100 seeds: 0 violations, LHS monotone in SNR, rho3 >= rho2 at 5 dB",
            result.cells.len()
        ))
    })
}

fn sbm_task(seed: u64) -> s2gnn::Result<SbmTask> {
    let g: Graph<f64> = sbm(200, 2, 0.1, 0.01, WeightDist::Unit, seed)?;
    let labels = g.labels().expect("labelled").to_vec();
    let x = class_gaussian_features(&labels, 16, 1.0, seed + 1000);
    let masks = split(
        200,
        Some(&labels),
        SplitSpec::fractions(0.1, 0.45, 0.45),
        seed,
    )?;
    Ok((g, x, labels, masks))
}

fn synthetic_training() -> Outcome {
    timed(Duration::from_secs(300), || {
        let (mut s2, mut gcn) = (Vec::new(), Vec::new());
        for seed in 0..10 {
            let (g, x, labels, masks) = ok(sbm_task(seed))?;
            let cfg = ModelConfig {
                alpha: 3,
                epsilon: 1.0,
                fusion: Fusion::Linear,
                seed,
                ..ModelConfig::with_widths(2, 16, 2)
            };
            s2.push(
                ok(train(&cfg, &g, &x, &labels, &masks))?
                    .report
                    .test_accuracy
                    .unwrap(),
            );
            gcn.push(
                ok(train_gcn_baseline(&cfg, &g, &x, &labels, &masks))?
                    .report
                    .test_accuracy
                    .unwrap(),
            );
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (a, b) = (mean(&s2), mean(&gcn));
        check(a >= 0.85 && a >= b - 0.02, || {
            format!("S2-GNN mean {a:.4}, GCN mean {b:.4}")
        })?;
        Ok(format!(
            "S2-GNN mean test accuracy {a:.4} (>= 0.85), GCN {b:.4} (>= GCN - 0.02)"
        ))
    })
}

fn s2gnn(dir: &Path, args: &[&str]) -> Result<Output, String> {
    ok(Command::new(env!("CARGO_BIN_EXE_s2gnn"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output())
}

fn ablations() -> Outcome {
    let tmp = ok(tempfile::tempdir())?;
    let mut reports = Vec::new();
    for (name, flags) in [
        ("full", vec![]),
        ("hadamard_off", vec!["--ablation-hadamard-off"]),
        ("regular_norm", vec!["--ablation-regular-norm"]),
    ] {
        let dir = tmp.path().join(name);
        let mut args = vec!["train", "--seed", "3"];
        args.extend(flags);
        let out = s2gnn(&dir, &args)?;
        check(out.status.success(), || {
            format!("{name}: {}", String::from_utf8_lossy(&out.stderr))
        })?;
        let report = ok(TrainReport::from_json(&ok(std::fs::read_to_string(
            dir.join("report.json"),
        ))?))?;
        reports.push(report);
    }
    let variants: Vec<Variant> = reports.iter().map(|r| r.variant).collect();
    check(
        variants == [Variant::S2gnn, Variant::HadamardOff, Variant::RegularNorm],
        || format!("variants {variants:?}"),
    )?;
    for r in &reports {
        check(
            r.test_accuracy.is_some() && r.epochs.len() == reports[0].epochs.len(),
            || format!("{:?}: incomplete report", r.variant),
        )?;
        check(r.parameter_count == reports[0].parameter_count, || {
            "parameter counts differ".into()
        })?;
    }
    // unit weights and ε = 1 make every entry of A + εI equal to 1, so all
    // Hadamard powers coincide and switching them off changes nothing;
    // regular powers do change the operators
    check(
        reports[1].without_timing().epochs == reports[0].without_timing().epochs,
        || "hadamard-off differs although (A+I)^(ρ) = A+I for unit weights".into(),
    )?;
    check(reports[2].test_loss != reports[0].test_loss, || {
        "regular-norm trained identically".into()
    })?;
    let out = s2gnn(
        &tmp.path().join("capped"),
        &["train", "--ablation-regular-norm", "--dense-cap", "100"],
    )?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    check(
        out.status.code() == Some(2) && stderr.contains("exceeds the cap of 100"),
        || format!("dense cap: status {:?}, stderr {stderr}", out.status.code()),
    )?;
    let acc: Vec<String> = reports
        .iter()
        .map(|r| format!("{:?} {:.3}", r.variant, r.test_accuracy.unwrap()))
        .collect();
    Ok(format!(
        "reports [{}]; regular-norm above cap rejected (exit 2)",
        acc.join(", ")
    ))
}

fn bench_shape() -> Outcome {
    let tmp = ok(tempfile::tempdir())?;
    let out = s2gnn(tmp.path(), &["bench", "--repeats", "3"])?;
    check(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    let text = ok(std::fs::read_to_string(tmp.path().join("bench.csv")))?;
    check(text.starts_with("# s2gnn "), || {
        "missing comment line".into()
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = ok(reader.headers())?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or(format!("no column {name}"))
    };
    let (ci_n, ci_p, ci_model, ci_med, ci_status) = (
        col("n_nodes")?,
        col("p")?,
        col("model")?,
        col("median_forward_secs")?,
        col("status")?,
    );
    let mut cells = std::collections::BTreeMap::<(String, usize), f64>::new();
    let mut single = std::collections::BTreeMap::<(String, usize, String), f64>::new();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = ok(rec)?;
        rows += 1;
        if &rec[ci_status] != "ok" {
            check(rec[ci_status].starts_with("skipped"), || {
                format!("failed cell {rec:?}")
            })?;
            continue;
        }
        check(rec.iter().all(|f| !f.is_empty()), || {
            format!("incomplete row {rec:?}")
        })?;
        let n: usize = ok(rec[ci_n].parse())?;
        let t: f64 = ok(rec[ci_med].parse())?;
        match &rec[ci_model] {
            "s2gnn" => {
                cells.insert((rec[ci_p].to_string(), n), t);
            }
            m => {
                single.insert((rec[ci_p].to_string(), n, m.to_string()), t);
            }
        }
    }
    check(rows == 4 * 4 * 3, || format!("{rows} rows"))?;
    for p in ["0.03", "0.04", "0.05", "0.06"] {
        let series: Vec<(usize, f64)> = cells
            .iter()
            .filter(|((q, _), _)| q == p)
            .map(|((_, n), t)| (*n, *t))
            .collect();
        for w in series.windows(2) {
            check(w[1].1 >= w[0].1, || {
                format!("p={p}: median time drops from N={} to N={}", w[0].0, w[1].0)
            })?;
        }
    }
    // α = 1 against GCN: reported, asserted loosely since timings are noisy
    let ratio = cells
        .keys()
        .filter_map(|(p, n)| {
            let a = single.get(&(p.clone(), *n, "s2gnn_alpha1".into()))?;
            let g = single.get(&(p.clone(), *n, "gcn".into()))?;
            Some(a.max(*g) / a.min(*g))
        })
        .fold(1.0f64, f64::max);
    check(ratio < 4.0, || {
        format!("alpha=1 vs GCN time ratio {ratio:.2}")
    })?;
    Ok(format!(
        "{rows} rows, {} S2-GNN cells timed; medians non-decreasing in N; \
         worst alpha=1/GCN time ratio {ratio:.2}",
        cells.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "spectrum oracle: Kronecker reconstruction equals Hadamard power",
            spectrum_oracle,
        ),
        ("sparse Sobolev norm axioms", norm_axioms),
        ("sparsity pattern preservation", sparsity_preservation),
        ("condition number closed form", condition_numbers),
        ("single-branch S2-GNN equals GCN", gcn_equivalence),
        ("analytic gradients match finite differences", gradients),
        (
            "stability sweep: bound, SNR monotonicity, rho sensitivity",
            stability,
        ),
        ("synthetic SBM training accuracy", synthetic_training),
        ("ablation plumbing through the CLI", ablations),
        ("bench grid shape", bench_shape),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS criterion {:>2}: {name} -- {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} -- {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
