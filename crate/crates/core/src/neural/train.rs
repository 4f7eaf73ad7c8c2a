use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::{seeded_rng, Graph, SplitMask};
use crate::scalar::Scalar;
use crate::sobolev::{PowerMode, ShiftBank, ShiftBase};
use crate::sparse_core::Dense;

use super::config::{Fusion, ModelConfig};
use super::layers::gcn_operator;
use super::loss::{masked_accuracy, masked_cross_entropy};
use super::model::Model;
use super::optim::Adam;

/// Which operator bank a run used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    S2gnn,
    HadamardOff,
    RegularNorm,
    Gcn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

/// Summary of one training run. Metrics are evaluation-mode (no dropout)
/// after each epoch's update; test metrics use the selected epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub variant: Variant,
    pub config: ModelConfig,
    pub epochs: Vec<EpochMetrics>,
    /// 0 means the initial parameters were kept.
    pub best_epoch: usize,
    pub best_val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_loss: Option<f64>,
    pub parameter_count: usize,
    pub stored_operator_entries: usize,
    pub wall_time_secs: f64,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Copy with the wall time zeroed, for run-to-run comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }
}

/// Trained (selected-epoch) model together with its report.
#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub report: TrainReport,
    pub model: Model<T>,
}

/// Operator bank implied by the config's ablation flags.
pub fn bank_for_config<T: Scalar>(
    config: &ModelConfig,
    g: &Graph<T>,
) -> Result<(ShiftBank<T>, Variant)> {
    let (mode, variant) = if config.ablation_hadamard_off {
        (PowerMode::HadamardOff, Variant::HadamardOff)
    } else if config.ablation_regular_norm {
        (
            PowerMode::Regular {
                dense_cap: config.dense_cap,
            },
            Variant::RegularNorm,
        )
    } else {
        (PowerMode::Hadamard, Variant::S2gnn)
    };
    let bank = ShiftBank::build(
        g,
        T::lit(config.epsilon),
        config.alpha,
        ShiftBase::Adjacency,
        mode,
    )?;
    Ok((bank, variant))
}

/// Trains an S2-GNN (or an ablation, per the config flags).
pub fn train<T: Scalar>(
    config: &ModelConfig,
    g: &Graph<T>,
    x: &Dense<T>,
    labels: &[usize],
    splits: &SplitMask,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let (bank, variant) = bank_for_config(config, g)?;
    train_with_bank(config, &bank, x, labels, splits, variant)
}

/// GCN baseline: one `Â = D̃^{-1/2}(A+I)D̃^{-1/2}` branch per layer, no
/// fusion. Only widths, optimizer settings and seed are taken from `config`.
pub fn train_gcn_baseline<T: Scalar>(
    config: &ModelConfig,
    g: &Graph<T>,
    x: &Dense<T>,
    labels: &[usize],
    splits: &SplitMask,
) -> Result<TrainOutcome<T>> {
    let config = gcn_config(config);
    config.validate()?;
    let bank = ShiftBank::custom(vec![gcn_operator(g)?], T::one(), true)?;
    train_with_bank(&config, &bank, x, labels, splits, Variant::Gcn)
}

/// The GCN special case of `config`.
pub fn gcn_config(config: &ModelConfig) -> ModelConfig {
    ModelConfig {
        alpha: 1,
        epsilon: 1.0,
        fusion: Fusion::Disabled,
        ablation_hadamard_off: false,
        ablation_regular_norm: false,
        ..config.clone()
    }
}

fn evaluate<T: Scalar>(
    log_probs: &Dense<T>,
    labels: &[usize],
    mask: &[bool],
) -> Result<Option<(f64, f64)>> {
    if !mask.iter().any(|&m| m) {
        return Ok(None);
    }
    let loss = masked_cross_entropy(log_probs, labels, mask)?.as_f64();
    Ok(Some((loss, masked_accuracy(log_probs, labels, mask)?)))
}

pub fn train_with_bank<T: Scalar>(
    config: &ModelConfig,
    bank: &ShiftBank<T>,
    x: &Dense<T>,
    labels: &[usize],
    splits: &SplitMask,
    variant: Variant,
) -> Result<TrainOutcome<T>> {
    let start = Instant::now();
    let n = x.n_rows();
    if labels.len() != n || splits.n_nodes() != n {
        return Err(Error::InvalidArgument(format!(
            "{n} nodes, {} labels, masks over {} nodes",
            labels.len(),
            splits.n_nodes()
        )));
    }
    let mut model = Model::new(config.clone(), x.n_cols())?;
    let mut adam = Adam::new(config.learning_rate);
    // init draws from the seed's stream; dropout uses an independent one
    let mut dropout_rng = seeded_rng(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut epochs = Vec::with_capacity(config.max_epochs);
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut best_key: Option<(f64, f64)> = None;
    let has_val = splits.val.iter().any(|&m| m);

    for epoch in 1..=config.max_epochs {
        let pass = model.forward_pass(bank, x, Some(&mut dropout_rng))?;
        let grads = model.backward(bank, &pass, labels, &splits.train)?;
        let step_loss = grads.loss.as_f64();
        if !step_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: step_loss,
            });
        }
        let grad_tensors: Vec<&[T]> = grads.layers.iter().flat_map(|l| l.tensors()).collect();
        let params: Vec<&mut [T]> = model
            .layers_mut()
            .iter_mut()
            .flat_map(|l| l.tensors_mut())
            .collect();
        adam.step(params, &grad_tensors)?;

        let lp = model.forward(bank, x)?;
        let (train_loss, train_accuracy) =
            evaluate(&lp, labels, &splits.train)?.expect("training mask is non-empty");
        if !train_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let val = evaluate(&lp, labels, &splits.val)?;
        log::debug!(
            "epoch {epoch}: train loss {train_loss:.5} acc {train_accuracy:.4} val {val:?}"
        );
        epochs.push(EpochMetrics {
            epoch,
            train_loss,
            train_accuracy,
            val_loss: val.map(|v| v.0),
            val_accuracy: val.map(|v| v.1),
        });

        // highest validation accuracy, then lowest validation loss
        let improved = match (val, best_key) {
            _ if !has_val => true,
            (Some((loss, acc)), Some((best_acc, best_loss))) => {
                acc > best_acc || (acc == best_acc && loss < best_loss)
            }
            (Some(_), None) => true,
            (None, _) => false,
        };
        if improved {
            best = model.clone();
            best_epoch = epoch;
            best_key = val.map(|(loss, acc)| (acc, loss));
        }
    }

    let lp = best.forward(bank, x)?;
    let test = evaluate(&lp, labels, &splits.test)?;
    let report = TrainReport {
        variant,
        config: config.clone(),
        epochs,
        best_epoch,
        best_val_accuracy: best_key.map(|k| k.0),
        test_accuracy: test.map(|t| t.1),
        test_loss: test.map(|t| t.0),
        parameter_count: best.parameter_count(),
        stored_operator_entries: bank.stored_entries(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "{:?}: best epoch {} val {:?} test {:?}",
        variant,
        report.best_epoch,
        report.best_val_accuracy,
        report.test_accuracy
    );
    Ok(TrainOutcome {
        report,
        model: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{class_gaussian_features, sbm, split, SplitSpec, WeightDist};

    fn task(seed: u64) -> (Graph<f64>, Dense<f64>, Vec<usize>, SplitMask) {
        let g: Graph<f64> = sbm(60, 2, 0.3, 0.02, WeightDist::Unit, seed).unwrap();
        let labels = g.labels().unwrap().to_vec();
        let x = class_gaussian_features(&labels, 4, 1.0, seed);
        let masks = split(60, Some(&labels), SplitSpec::fractions(0.2, 0.4, 0.4), seed).unwrap();
        (g, x, labels, masks)
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            max_epochs: 30,
            ..ModelConfig::with_widths(2, 8, 2)
        }
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let (g, x, labels, masks) = task(1);
        let config = ModelConfig {
            learning_rate: 0.0,
            ..small_config()
        };
        let out = train(&config, &g, &x, &labels, &masks).unwrap();
        let first = out.report.epochs[0].train_loss;
        assert!(out.report.epochs.iter().all(|e| e.train_loss == first));
        assert_eq!(out.model, Model::new(config, 4).unwrap());
    }

    #[test]
    fn runs_are_deterministic() {
        let (g, x, labels, masks) = task(2);
        let a = train(&small_config(), &g, &x, &labels, &masks).unwrap();
        let b = train(&small_config(), &g, &x, &labels, &masks).unwrap();
        assert_eq!(a.report.without_timing(), b.report.without_timing());
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn training_reduces_loss_and_reports_are_sane() {
        let (g, x, labels, masks) = task(3);
        let out = train(&small_config(), &g, &x, &labels, &masks).unwrap();
        let r = &out.report;
        assert_eq!(r.epochs.len(), 30);
        assert!(r.epochs.last().unwrap().train_loss < r.epochs[0].train_loss);
        for e in &r.epochs {
            assert!((0.0..=1.0).contains(&e.train_accuracy));
        }
        assert!((0.0..=1.0).contains(&r.test_accuracy.unwrap()));
        let json = r.to_json().unwrap();
        assert_eq!(TrainReport::from_json(&json).unwrap(), *r);
    }

    #[test]
    fn ablations_and_baseline_run() {
        let (g, x, labels, masks) = task(4);
        for (flags, variant) in [
            ((true, false), Variant::HadamardOff),
            ((false, true), Variant::RegularNorm),
        ] {
            let config = ModelConfig {
                ablation_hadamard_off: flags.0,
                ablation_regular_norm: flags.1,
                max_epochs: 5,
                ..small_config()
            };
            assert_eq!(
                train(&config, &g, &x, &labels, &masks)
                    .unwrap()
                    .report
                    .variant,
                variant
            );
        }
        let gcn = train_gcn_baseline(&small_config(), &g, &x, &labels, &masks).unwrap();
        assert_eq!(gcn.report.variant, Variant::Gcn);
        assert_eq!(gcn.model.layers()[0].weights.len(), 1);

        let capped = ModelConfig {
            ablation_regular_norm: true,
            dense_cap: 10,
            ..small_config()
        };
        assert!(matches!(
            train(&capped, &g, &x, &labels, &masks),
            Err(Error::DenseCapExceeded { .. })
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let (g, x, labels, masks) = task(5);
        let x = x.scale(1e300);
        let config = ModelConfig {
            learning_rate: 1e300,
            dropout: 0.0,
            ..small_config()
        };
        assert!(matches!(
            train(&config, &g, &x, &labels, &masks),
            Err(Error::Diverged { .. })
        ));
    }
}
