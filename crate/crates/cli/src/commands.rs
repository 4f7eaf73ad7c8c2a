use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use s2gnn::graphgen::io::{load_graph, load_labels, load_masks, load_matrix, save_graph};
use s2gnn::graphgen::{
    class_gaussian_features, homophily_index, knn_graph, sbm, sparsity_percentage, split,
    Bandwidth, Graph, SplitSpec, WeightDist, DEFAULT_KNN_K,
};
use s2gnn::neural::{save_checkpoint, train, train_gcn_baseline, Activation, ModelConfig};
use s2gnn::sobolev::{eigen_penalization_curves, sobolev_term_capped};
use s2gnn::sparse_core::{Dense, DEFAULT_DENSE_CAP};
use s2gnn::stability::{stability_sweep, SweepProtocol};

use crate::bench::{run_bench, BenchModel, BenchSpec};
use crate::error::{CliError, CliResult};
use crate::settings::RunConfig;
use crate::verify::{run_suite, Suite};
use crate::{Cli, Command, StabilityArgs, TrainArgs};

fn s<V: ToString>(v: &Option<V>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

fn flag(set: bool) -> Option<String> {
    set.then(|| "true".to_string())
}

fn join<V: ToString>(values: &[V]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn require(cfg: &RunConfig, key: &str) -> CliResult<PathBuf> {
    cfg.get_path(key).ok_or_else(|| {
        CliError::Usage(format!(
            "`{}` needs --{}",
            cfg.subcommand(),
            key.replace('_', "-")
        ))
    })
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> CliResult<String> {
    let text = serde_json::to_string_pretty(value)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), format!("{text}\n"))?;
    Ok(text)
}

pub(crate) fn dispatch(cli: &Cli) -> CliResult<()> {
    let out = &cli.global.out_dir;
    let file = cli.global.config.as_deref();
    let seed = ("seed", s(&cli.global.seed));
    match &cli.command {
        Command::Verify { suite } => {
            let cfg = RunConfig::resolve(
                "verify",
                vec![("suite", "all".into()), ("seed", "0".into())],
                file,
                vec![("suite", suite.map(|s| s.name().to_string())), seed],
            )?;
            cmd_verify(&cfg, out)
        }
        Command::Knn {
            features,
            k,
            out: graph_out,
            bandwidth,
        } => {
            let cfg = RunConfig::resolve(
                "knn",
                vec![
                    ("features", String::new()),
                    ("k", DEFAULT_KNN_K.to_string()),
                    ("out", String::new()),
                    ("bandwidth", "auto".into()),
                    ("seed", "0".into()),
                ],
                file,
                vec![
                    ("features", p(features)),
                    ("k", s(k)),
                    ("out", p(graph_out)),
                    ("bandwidth", bandwidth.clone()),
                    seed,
                ],
            )?;
            cmd_knn(&cfg, out)
        }
        Command::Train(args) => {
            let cfg = train_config(args, file, seed)?;
            cmd_train(&cfg, out)
        }
        Command::Sparsity {
            graph,
            epsilon,
            rho_max,
            dense_cap,
        } => {
            let cfg = RunConfig::resolve(
                "sparsity",
                vec![
                    ("graph", String::new()),
                    ("epsilon", "1".into()),
                    ("rho_max", "6".into()),
                    ("dense_cap", DEFAULT_DENSE_CAP.to_string()),
                    ("seed", "0".into()),
                ],
                file,
                vec![
                    ("graph", p(graph)),
                    ("epsilon", s(epsilon)),
                    ("rho_max", s(rho_max)),
                    ("dense_cap", s(dense_cap)),
                    seed,
                ],
            )?;
            cmd_sparsity(&cfg, out)
        }
        Command::Bench {
            nodes,
            p: probs,
            repeats,
            features,
            alpha,
            models,
        } => {
            let d = BenchSpec::default();
            let cfg = RunConfig::resolve(
                "bench",
                vec![
                    ("nodes", join(&d.nodes)),
                    ("p", join(&d.p_values)),
                    ("repeats", d.repeats.to_string()),
                    ("features", d.features.to_string()),
                    ("alpha", d.alpha.to_string()),
                    ("epsilon", d.epsilon.to_string()),
                    ("hidden", d.hidden.to_string()),
                    ("classes", d.classes.to_string()),
                    (
                        "models",
                        d.models
                            .iter()
                            .map(|m| m.label())
                            .collect::<Vec<_>>()
                            .join(","),
                    ),
                    ("seed", d.seed.to_string()),
                ],
                file,
                vec![
                    ("nodes", nodes.clone()),
                    ("p", probs.clone()),
                    ("repeats", s(repeats)),
                    ("features", s(features)),
                    ("alpha", s(alpha)),
                    ("models", models.clone()),
                    seed,
                ],
            )?;
            cmd_bench(&cfg, out)
        }
        Command::Stability(args) => {
            let cfg = stability_config(args, file, seed)?;
            cmd_stability(&cfg, out)
        }
        Command::Homophily { graph, labels } => {
            let cfg = RunConfig::resolve(
                "homophily",
                vec![
                    ("graph", String::new()),
                    ("labels", String::new()),
                    ("seed", "0".into()),
                ],
                file,
                vec![("graph", p(graph)), ("labels", p(labels)), seed],
            )?;
            cmd_homophily(&cfg, out)
        }
        Command::Curves { graph, rho_max } => {
            let cfg = RunConfig::resolve(
                "curves",
                vec![
                    ("graph", String::new()),
                    ("rho_max", "3".into()),
                    ("seed", "0".into()),
                ],
                file,
                vec![("graph", p(graph)), ("rho_max", s(rho_max)), seed],
            )?;
            cmd_curves(&cfg, out)
        }
    }
}

fn cmd_verify(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let suite: Suite = clap::ValueEnum::from_str(cfg.get_str("suite"), false)
        .map_err(|_| CliError::Usage(format!("unknown suite {:?}", cfg.get_str("suite"))))?;
    cfg.write_manifest(out)?;
    let report = run_suite(suite, cfg.get("seed")?)?;
    println!("{}", write_json(out, "verify.json", &report)?);
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .properties
            .iter()
            .filter(|p| !p.passed)
            .map(|p| p.name)
            .collect();
        Err(CliError::Violation(format!(
            "failed properties: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_knn(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let features: Dense<f64> = load_matrix(&require(cfg, "features")?)?;
    let bandwidth = match cfg.get_str("bandwidth") {
        "auto" => Bandwidth::Auto,
        _ => Bandwidth::Fixed(cfg.get("bandwidth")?),
    };
    let g = knn_graph(&features, cfg.get("k")?, bandwidth)?;
    cfg.write_manifest(out)?;
    let path = cfg.get_path("out").unwrap_or_else(|| out.join("knn.graph"));
    save_graph(&g, &path)?;
    let (lo, hi) = g
        .edges()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, w)| {
            (lo.min(w), hi.max(w))
        });
    println!(
        "N={} |E|={} weight_range=[{lo}, {hi}] graph={}",
        g.n_nodes(),
        g.n_edges(),
        path.display()
    );
    Ok(())
}

fn train_config(
    args: &TrainArgs,
    file: Option<&Path>,
    seed: (&'static str, Option<String>),
) -> CliResult<RunConfig> {
    let mut defaults: Vec<(&str, String)> = vec![
        ("graph", String::new()),
        ("features", String::new()),
        ("labels", String::new()),
        ("masks", String::new()),
        ("split", "0.1,0.45,0.45".into()),
        ("sbm_nodes", "200".into()),
        ("sbm_blocks", "2".into()),
        ("p_in", "0.1".into()),
        ("p_out", "0.01".into()),
        ("feature_dim", "16".into()),
        ("separation", "1".into()),
        ("baseline", "none".into()),
        ("checkpoint", String::new()),
    ];
    defaults.extend(ModelConfig::default().entries());
    RunConfig::resolve(
        "train",
        defaults,
        file,
        vec![
            ("graph", p(&args.graph)),
            ("features", p(&args.features)),
            ("labels", p(&args.labels)),
            ("masks", p(&args.masks)),
            ("split", args.split.clone()),
            ("sbm_nodes", s(&args.sbm_nodes)),
            ("sbm_blocks", s(&args.sbm_blocks)),
            ("p_in", s(&args.p_in)),
            ("p_out", s(&args.p_out)),
            ("feature_dim", s(&args.feature_dim)),
            ("separation", s(&args.separation)),
            ("baseline", args.baseline.clone()),
            ("checkpoint", p(&args.checkpoint)),
            ("ablation_hadamard_off", flag(args.ablation_hadamard_off)),
            ("ablation_regular_norm", flag(args.ablation_regular_norm)),
            ("fusion", args.fusion.clone()),
            ("alpha", s(&args.alpha)),
            ("epsilon", s(&args.epsilon)),
            ("n_layers", s(&args.n_layers)),
            ("hidden_units", args.hidden_units.clone()),
            ("dropout", s(&args.dropout)),
            ("learning_rate", s(&args.learning_rate)),
            ("weight_decay", s(&args.weight_decay)),
            ("max_epochs", s(&args.max_epochs)),
            ("dense_cap", s(&args.dense_cap)),
            seed,
        ],
    )
}

struct Dataset {
    graph: Graph<f64>,
    x: Dense<f64>,
    labels: Vec<usize>,
    masks: s2gnn::graphgen::SplitMask,
}

fn load_dataset(cfg: &RunConfig, seed: u64) -> CliResult<Dataset> {
    let (graph, x, labels) = match cfg.get_path("graph") {
        Some(path) => {
            let graph: Graph<f64> = load_graph(&path)?;
            let x: Dense<f64> = load_matrix(&require(cfg, "features")?)?;
            let labels = load_labels(&require(cfg, "labels")?)?;
            let n = graph.n_nodes();
            if x.n_rows() != n || labels.len() != n {
                return Err(CliError::Usage(format!(
                    "inconsistent node counts: graph {n}, features {}, labels {}",
                    x.n_rows(),
                    labels.len()
                )));
            }
            (graph, x, labels)
        }
        None => {
            let graph: Graph<f64> = sbm(
                cfg.get("sbm_nodes")?,
                cfg.get("sbm_blocks")?,
                cfg.get("p_in")?,
                cfg.get("p_out")?,
                WeightDist::Unit,
                seed,
            )?;
            let labels = graph.labels().expect("sbm graphs are labelled").to_vec();
            let x = class_gaussian_features(
                &labels,
                cfg.get("feature_dim")?,
                cfg.get("separation")?,
                seed + 1000,
            );
            (graph, x, labels)
        }
    };
    let n = graph.n_nodes();
    let masks = match cfg.get_path("masks") {
        Some(path) => load_masks(&path, n)?,
        None => {
            let f: Vec<f64> = cfg.get_list("split")?;
            let [train, val, test] = f[..] else {
                return Err(CliError::Usage(
                    "split needs three fractions train,val,test".into(),
                ));
            };
            split(
                n,
                Some(&labels),
                SplitSpec::fractions(train, val, test),
                seed,
            )?
        }
    };
    Ok(Dataset {
        graph,
        x,
        labels,
        masks,
    })
}

fn model_config(cfg: &RunConfig, n_classes: usize) -> CliResult<ModelConfig> {
    let mut model = ModelConfig::default();
    for key in ModelConfig::KEYS {
        model.set(key, cfg.get_str(key))?;
    }
    if !cfg.is_explicit("hidden_units") {
        if let Some(last) = model.hidden_units.last_mut() {
            *last = n_classes;
        }
    }
    if model.n_classes() != n_classes {
        return Err(CliError::Usage(format!(
            "last hidden_units entry is {} but the labels have {n_classes} classes",
            model.n_classes()
        )));
    }
    Ok(model)
}

fn cmd_train(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let seed: u64 = cfg.get("seed")?;
    let data = load_dataset(cfg, seed)?;
    let n_classes = data.labels.iter().max().map_or(0, |&m| m + 1);
    let model = model_config(cfg, n_classes)?;
    let gcn = match cfg.get_str("baseline") {
        "gcn" => true,
        "none" => false,
        other => return Err(CliError::Usage(format!("unknown baseline {other:?}"))),
    };
    model.validate()?;
    cfg.write_manifest(out)?;
    let outcome = if gcn {
        train_gcn_baseline(&model, &data.graph, &data.x, &data.labels, &data.masks)?
    } else {
        train(&model, &data.graph, &data.x, &data.labels, &data.masks)?
    };
    let report = &outcome.report;
    cfg.write_csv(out, "epochs.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        for e in &report.epochs {
            csv.serialize(e)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let text = report.to_json()?;
    fs::write(out.join("report.json"), format!("{text}\n"))?;
    if let Some(dir) = cfg.get_path("checkpoint") {
        save_checkpoint(&outcome.model, &dir)?;
    }
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct SparsityRow {
    rho: u32,
    dense_sparsity_pct: f64,
    sparse_sparsity_pct: f64,
    dense_nonzeros: usize,
    sparse_stored: usize,
}

fn cmd_sparsity(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let g: Graph<f64> = load_graph(&require(cfg, "graph")?)?;
    let eps: f64 = cfg.get("epsilon")?;
    let rho_max: u32 = cfg.get("rho_max")?;
    let cap: usize = cfg.get("dense_cap")?;
    if rho_max == 0 {
        return Err(CliError::Usage("rho_max must be at least 1".into()));
    }
    let l = g.laplacian();
    let mut rows = Vec::new();
    for rho in 1..=rho_max {
        let dense = sobolev_term_capped(&l, eps, rho, false, cap)?.to_dense();
        let sparse = sobolev_term_capped(&l, eps, rho, true, cap)?;
        let sparse = sparse.as_sparse().expect("sparse mode");
        rows.push(SparsityRow {
            rho,
            dense_sparsity_pct: sparsity_percentage(&dense),
            sparse_sparsity_pct: sparsity_percentage(sparse),
            dense_nonzeros: dense
                .values()
                .iter()
                .filter(|v| v.abs() > s2gnn::graphgen::ZERO_TOLERANCE)
                .count(),
            sparse_stored: sparse.nnz(),
        });
    }
    cfg.write_manifest(out)?;
    cfg.write_csv(out, "sparsity.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in &rows {
            csv.serialize(r)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    for r in &rows {
        println!(
            "rho={} dense={:.2}% sparse={:.2}%",
            r.rho, r.dense_sparsity_pct, r.sparse_sparsity_pct
        );
    }
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let models = cfg
        .get_list::<String>("models")?
        .iter()
        .map(|m| {
            BenchModel::parse(m)
                .ok_or_else(|| CliError::Usage(format!("unknown bench model {m:?}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let spec = BenchSpec {
        nodes: cfg.get_list("nodes")?,
        p_values: cfg.get_list("p")?,
        models,
        repeats: cfg.get("repeats")?,
        features: cfg.get("features")?,
        alpha: cfg.get("alpha")?,
        epsilon: cfg.get("epsilon")?,
        hidden: cfg.get("hidden")?,
        classes: cfg.get("classes")?,
        seed: cfg.get("seed")?,
    };
    if spec.repeats == 0
        || spec.nodes.is_empty()
        || spec.p_values.is_empty()
        || spec.models.is_empty()
    {
        return Err(CliError::Usage(
            "bench needs repeats >= 1 and non-empty grids".into(),
        ));
    }
    cfg.write_manifest(out)?;
    cfg.write_csv(out, "bench.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut failure = None;
        run_bench(&spec, |row| {
            // flush per row so partial grids survive an abort
            if failure.is_none() {
                failure = csv.serialize(row).and_then(|_| Ok(csv.flush()?)).err();
            }
        });
        match failure {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    })?;
    println!("wrote {}", out.join("bench.csv").display());
    Ok(())
}

fn stability_config(
    args: &StabilityArgs,
    file: Option<&Path>,
    seed: (&'static str, Option<String>),
) -> CliResult<RunConfig> {
    let d = SweepProtocol::default();
    let seeds = match (args.seeds, args.quick) {
        (Some(n), _) => Some(n.to_string()),
        (None, true) => Some("10".into()),
        (None, false) => None,
    };
    RunConfig::resolve(
        "stability",
        vec![
            ("rhos", join(&d.rhos)),
            ("p_values", join(&d.p_values)),
            ("epsilons", join(&d.epsilons)),
            ("snrs_db", join(&d.snrs_db)),
            ("n_nodes", d.n_nodes.to_string()),
            ("f_in", d.f_in.to_string()),
            ("f_out", d.f_out.to_string()),
            ("seeds", d.seeds.to_string()),
            ("activation", "relu".into()),
            ("perturb_weights", d.perturb_weights.to_string()),
            ("seed", d.base_seed.to_string()),
        ],
        file,
        vec![
            ("rhos", args.rhos.clone()),
            ("p_values", args.p_values.clone()),
            ("epsilons", args.epsilons.clone()),
            ("snrs_db", args.snrs_db.clone()),
            ("n_nodes", s(&args.n_nodes)),
            ("seeds", seeds),
            ("activation", args.activation.clone()),
            seed,
        ],
    )
}

fn cmd_stability(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let activation = match cfg.get_str("activation") {
        "relu" => Activation::Relu,
        "identity" => Activation::Identity,
        other => return Err(CliError::Usage(format!("unknown activation {other:?}"))),
    };
    let protocol = SweepProtocol {
        rhos: cfg.get_list("rhos")?,
        p_values: cfg.get_list("p_values")?,
        epsilons: cfg.get_list("epsilons")?,
        snrs_db: cfg.get_list("snrs_db")?,
        n_nodes: cfg.get("n_nodes")?,
        f_in: cfg.get("f_in")?,
        f_out: cfg.get("f_out")?,
        seeds: cfg.get("seeds")?,
        base_seed: cfg.get("seed")?,
        activation,
        perturb_weights: cfg.get("perturb_weights")?,
    };
    let result = stability_sweep(&protocol)?;
    cfg.write_manifest(out)?;
    cfg.write_csv(out, "stability.csv", |w| Ok(result.write_csv(w)?))?;
    let summary = json!({
        "cells": result.cells.len(),
        "seeds": protocol.seeds,
        "exact_bound_violations": result.total_violations(),
        "output_norm_bound_violations": result.total_norm_bound_violations(),
        "first_order_shortfalls": result.cells.iter().map(|c| c.fo_violations).sum::<usize>(),
        "snr_monotonicity_failures": result.snr_monotonicity_failures().len(),
    });
    println!("{}", write_json(out, "stability.json", &summary)?);
    let violations = result.total_violations() + result.total_norm_bound_violations();
    if violations > 0 {
        return Err(CliError::Violation(format!(
            "{violations} stability bound violation(s)"
        )));
    }
    Ok(())
}

fn cmd_homophily(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let g: Graph<f64> = load_graph(&require(cfg, "graph")?)?;
    let labels = load_labels(&require(cfg, "labels")?)?;
    let (n, e) = (g.n_nodes(), g.n_edges());
    let g = g.with_labels(labels)?;
    let h = homophily_index(&g)?;
    cfg.write_manifest(out)?;
    write_json(
        out,
        "homophily.json",
        &json!({ "homophily": h, "n_nodes": n, "n_edges": e }),
    )?;
    println!("{h}");
    Ok(())
}

fn cmd_curves(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let g: Graph<f64> = load_graph(&require(cfg, "graph")?)?;
    let rho_max: u32 = cfg.get("rho_max")?;
    let curves = eigen_penalization_curves(&g.laplacian(), rho_max)?;
    cfg.write_manifest(out)?;
    cfg.write_csv(out, "curves.csv", |w| Ok(curves.write_csv(w)?))?;
    let mut stdout = std::io::stdout().lock();
    for rho in 1..=rho_max {
        writeln!(
            stdout,
            "rho={rho} mean_abs_gap={:.6}",
            curves.mean_abs_gap(rho).unwrap_or(0.0)
        )?;
    }
    Ok(())
}
