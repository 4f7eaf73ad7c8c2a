use rand::Rng;

use crate::error::{Error, Result};
use crate::graphgen::seeded_rng;
use crate::scalar::Scalar;
use crate::sobolev::ShiftBank;
use crate::sparse_core::{CsrMatrix, Dense};

use super::config::{Fusion, ModelConfig};
use super::layers::{branch_forward, fuse_linear, fuse_mlp, Activation};
use super::loss::{cross_entropy_grad, log_softmax, masked_cross_entropy};

/// Trainable parameters of one layer. Branch `k` uses the power
/// `config.branch_orders()[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Vec<Dense<T>>,
    pub biases: Vec<Vec<T>>,
    /// Fusion scalars; empty unless fusion is linear.
    pub mu: Vec<T>,
    /// Fusion matrix of shape `(α+1)·out × out`; only for MLP fusion.
    pub mlp: Option<Dense<T>>,
}

/// Name, shape and weight-decay flag of one parameter tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub decayed: bool,
}

impl<T: Scalar> LayerParams<T> {
    fn zeros_like(&self) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .map(|w| Dense::zeros(w.n_rows(), w.n_cols()))
                .collect(),
            biases: self
                .biases
                .iter()
                .map(|b| vec![T::zero(); b.len()])
                .collect(),
            mu: vec![T::zero(); self.mu.len()],
            mlp: self
                .mlp
                .as_ref()
                .map(|m| Dense::zeros(m.n_rows(), m.n_cols())),
        }
    }

    /// Tensors in a fixed order: `(w_k, b_k)` per branch, then `mu`, then `mlp`.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.values());
            out.push(b);
        }
        if !self.mu.is_empty() {
            out.push(&self.mu);
        }
        if let Some(m) = &self.mlp {
            out.push(m.values());
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.values_mut());
            out.push(b);
        }
        if !self.mu.is_empty() {
            out.push(&mut self.mu);
        }
        if let Some(m) = &mut self.mlp {
            out.push(m.values_mut());
        }
        out
    }

    /// Layout matching [`LayerParams::tensors`]; names are `w{ρ}`, `b{ρ}`,
    /// `mu`, `mlp`.
    pub fn layout(&self, orders: &[usize]) -> Vec<TensorInfo> {
        let mut out = Vec::new();
        for ((w, b), rho) in self.weights.iter().zip(&self.biases).zip(orders) {
            out.push(TensorInfo {
                name: format!("w{rho}"),
                rows: w.n_rows(),
                cols: w.n_cols(),
                decayed: true,
            });
            out.push(TensorInfo {
                name: format!("b{rho}"),
                rows: 1,
                cols: b.len(),
                decayed: false,
            });
        }
        if !self.mu.is_empty() {
            out.push(TensorInfo {
                name: "mu".into(),
                rows: 1,
                cols: self.mu.len(),
                decayed: false,
            });
        }
        if let Some(m) = &self.mlp {
            out.push(TensorInfo {
                name: "mlp".into(),
                rows: m.n_rows(),
                cols: m.n_cols(),
                decayed: true,
            });
        }
        out
    }
}

/// Gradients of the regularized loss, shaped like the model parameters.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub loss: T,
    pub layers: Vec<LayerParams<T>>,
}

struct LayerCache<T> {
    input: Dense<T>,
    dropout: Option<Dense<T>>,
    shifted: Vec<Option<Dense<T>>>,
    branches: Vec<Dense<T>>,
}

/// Intermediates of one forward evaluation, consumed by
/// [`Model::backward`].
pub struct ForwardPass<T> {
    pub log_probs: Dense<T>,
    caches: Vec<LayerCache<T>>,
}

/// A multi-layer S2-GNN.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    config: ModelConfig,
    in_dim: usize,
    layers: Vec<LayerParams<T>>,
}

fn glorot<T: Scalar, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Dense<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Dense::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-limit..limit)))
}

impl<T: Scalar> Model<T> {
    /// Glorot-uniform weights, zero biases, `μ = 1/(α+1)`.
    pub fn new(config: ModelConfig, in_dim: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        let orders = config.branch_orders();
        let mut layers = Vec::with_capacity(config.n_layers);
        for l in 0..config.n_layers {
            let (fan_in, fan_out) = Self::layer_dims(&config, in_dim, l);
            let weights = orders
                .iter()
                .map(|_| glorot(fan_in, fan_out, &mut rng))
                .collect();
            let k = orders.len();
            layers.push(LayerParams {
                weights,
                biases: vec![vec![T::zero(); fan_out]; k],
                mu: match config.fusion {
                    Fusion::Linear => vec![T::one() / T::from_usize_lossy(k); k],
                    _ => Vec::new(),
                },
                mlp: match config.fusion {
                    Fusion::Mlp => Some(glorot(k * fan_out, fan_out, &mut rng)),
                    _ => None,
                },
            });
        }
        Ok(Self {
            config,
            in_dim,
            layers,
        })
    }

    /// Every parameter zero (including `μ`).
    pub fn zeros(config: ModelConfig, in_dim: usize) -> Result<Self> {
        let mut model = Self::new(config, in_dim)?;
        model.layers = model.layers.iter().map(LayerParams::zeros_like).collect();
        Ok(model)
    }

    /// Model from explicit parameters; shapes are checked against `config`.
    pub fn from_layers(
        config: ModelConfig,
        in_dim: usize,
        layers: Vec<LayerParams<T>>,
    ) -> Result<Self> {
        let template = Self::zeros(config, in_dim)?;
        if layers.len() != template.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} layers given, config has {}",
                layers.len(),
                template.layers.len()
            )));
        }
        let orders = template.config.branch_orders();
        for (l, (got, want)) in layers.iter().zip(&template.layers).enumerate() {
            if got.layout(&orders) != want.layout(&orders)
                || got.weights.len() != want.weights.len()
            {
                return Err(Error::InvalidArgument(format!(
                    "layer {l} has inconsistent shapes"
                )));
            }
            if got
                .tensors()
                .iter()
                .any(|t| t.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::InvalidArgument(format!(
                    "layer {l} has non-finite parameters"
                )));
            }
        }
        Ok(Self { layers, ..template })
    }

    fn layer_dims(config: &ModelConfig, in_dim: usize, l: usize) -> (usize, usize) {
        let fan_in = if l == 0 {
            in_dim
        } else {
            config.hidden_units[l - 1]
        };
        (fan_in, config.hidden_units[l])
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn layers(&self) -> &[LayerParams<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams<T>] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(LayerParams::tensors)
            .map(<[T]>::len)
            .sum()
    }

    /// `½ Σ ‖W‖²_F` over branch and fusion matrices.
    pub fn weight_penalty(&self) -> T {
        let half = T::lit(0.5);
        self.layers
            .iter()
            .flat_map(|p| p.weights.iter().chain(p.mlp.iter()))
            .map(|w| half * w.values().iter().map(|&v| v * v).sum::<T>())
            .sum()
    }

    fn activation(&self, l: usize) -> Activation {
        if l + 1 == self.layers.len() {
            Activation::Identity
        } else {
            Activation::Relu
        }
    }

    fn operators<'a>(
        &self,
        bank: &'a ShiftBank<T>,
        n: usize,
    ) -> Result<Vec<Option<&'a CsrMatrix<T>>>> {
        if bank.n_nodes() != n {
            return Err(Error::DimensionMismatch {
                op: "model forward",
                left: (bank.n_nodes(), bank.n_nodes()),
                right: (n, self.in_dim),
            });
        }
        self.config
            .branch_orders()
            .into_iter()
            .map(|rho| match rho {
                0 => Ok(None),
                _ => bank.operator(rho).map(Some).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "shift bank has {} operators, branch needs power {rho}",
                        bank.alpha()
                    ))
                }),
            })
            .collect()
    }

    /// Evaluation-mode log-probabilities.
    pub fn forward(&self, bank: &ShiftBank<T>, x: &Dense<T>) -> Result<Dense<T>> {
        Ok(self
            .forward_pass::<rand_chacha::ChaCha8Rng>(bank, x, None)?
            .log_probs)
    }

    /// Full forward evaluation with cached intermediates. Passing an RNG
    /// enables inverted dropout on every layer input.
    pub fn forward_pass<R: Rng>(
        &self,
        bank: &ShiftBank<T>,
        x: &Dense<T>,
        mut dropout_rng: Option<&mut R>,
    ) -> Result<ForwardPass<T>> {
        if x.n_cols() != self.in_dim {
            return Err(Error::DimensionMismatch {
                op: "model input",
                left: x.shape(),
                right: (x.n_rows(), self.in_dim),
            });
        }
        let ops = self.operators(bank, x.n_rows())?;
        let p = self.config.dropout;
        let keep = T::lit(1.0 / (1.0 - p));
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (l, params) in self.layers.iter().enumerate() {
            let act = self.activation(l);
            let dropout = match dropout_rng.as_deref_mut() {
                Some(rng) if p > 0.0 => {
                    let mask = Dense::from_fn(h.n_rows(), h.n_cols(), |_, _| {
                        if rng.random::<f64>() < p {
                            T::zero()
                        } else {
                            keep
                        }
                    });
                    h = h.hadamard(&mask)?;
                    Some(mask)
                }
                _ => None,
            };
            let mut shifted = Vec::with_capacity(ops.len());
            let mut branches = Vec::with_capacity(ops.len());
            for (k, op) in ops.iter().enumerate() {
                let sh = op.map(|s| s.spmm(&h)).transpose()?;
                let src = sh.as_ref().unwrap_or(&h);
                branches.push(branch_forward(
                    None,
                    src,
                    &params.weights[k],
                    Some(&params.biases[k]),
                    act,
                )?);
                shifted.push(sh);
            }
            let refs: Vec<&Dense<T>> = branches.iter().collect();
            let fused = match self.config.fusion {
                Fusion::Linear => fuse_linear(&refs, &params.mu)?,
                Fusion::Mlp => fuse_mlp(&refs, params.mlp.as_ref().expect("mlp fusion params"))?,
                Fusion::Disabled => branches[0].clone(),
            };
            caches.push(LayerCache {
                input: std::mem::replace(&mut h, fused),
                dropout,
                shifted,
                branches,
            });
        }
        Ok(ForwardPass {
            log_probs: log_softmax(&h),
            caches,
        })
    }

    /// `masked_cross_entropy + weight_decay · ½Σ‖W‖²` in evaluation mode.
    pub fn objective(
        &self,
        bank: &ShiftBank<T>,
        x: &Dense<T>,
        labels: &[usize],
        mask: &[bool],
    ) -> Result<T> {
        let lp = self.forward(bank, x)?;
        Ok(masked_cross_entropy(&lp, labels, mask)?
            + T::lit(self.config.weight_decay) * self.weight_penalty())
    }

    /// Exact gradients of the regularized loss for the given forward pass.
    pub fn backward(
        &self,
        bank: &ShiftBank<T>,
        pass: &ForwardPass<T>,
        labels: &[usize],
        mask: &[bool],
    ) -> Result<Gradients<T>> {
        let n = pass.log_probs.n_rows();
        let ops = self.operators(bank, n)?;
        let wd = T::lit(self.config.weight_decay);
        let loss =
            masked_cross_entropy(&pass.log_probs, labels, mask)? + wd * self.weight_penalty();
        let mut grad_out = cross_entropy_grad(&pass.log_probs, labels, mask)?;
        let mut grads: Vec<LayerParams<T>> =
            self.layers.iter().map(LayerParams::zeros_like).collect();

        for l in (0..self.layers.len()).rev() {
            let params = &self.layers[l];
            let cache = &pass.caches[l];
            let g = &mut grads[l];
            let act = self.activation(l);
            let branch_grads: Vec<Dense<T>> = match self.config.fusion {
                Fusion::Linear => {
                    for (k, b) in cache.branches.iter().enumerate() {
                        g.mu[k] = b.hadamard(&grad_out)?.values().iter().copied().sum();
                    }
                    params.mu.iter().map(|&m| grad_out.scale(m)).collect()
                }
                Fusion::Mlp => {
                    let w_mlp = params.mlp.as_ref().expect("mlp fusion params");
                    let refs: Vec<&Dense<T>> = cache.branches.iter().collect();
                    let concat = Dense::hcat(&refs)?;
                    let mut dw = concat.t_matmul(&grad_out)?;
                    dw.add_scaled_assign(wd, w_mlp)?;
                    g.mlp = Some(dw);
                    let dconcat = grad_out.matmul_t(w_mlp)?;
                    let width = grad_out.n_cols();
                    (0..refs.len())
                        .map(|k| dconcat.column_block(k * width, width))
                        .collect()
                }
                Fusion::Disabled => vec![grad_out.clone()],
            };

            let mut grad_in = Dense::zeros(cache.input.n_rows(), cache.input.n_cols());
            for (k, db) in branch_grads.iter().enumerate() {
                let dz = act.backprop(db, &cache.branches[k])?;
                let src = cache.shifted[k].as_ref().unwrap_or(&cache.input);
                let mut dw = src.t_matmul(&dz)?;
                dw.add_scaled_assign(wd, &params.weights[k])?;
                g.weights[k] = dw;
                g.biases[k] = dz.column_sums();
                let dsrc = dz.matmul_t(&params.weights[k])?;
                let contribution = match ops[k] {
                    Some(s) => s.spmm_transpose(&dsrc)?,
                    None => dsrc,
                };
                grad_in.add_scaled_assign(T::one(), &contribution)?;
            }
            grad_out = match &cache.dropout {
                Some(m) => grad_in.hadamard(m)?,
                None => grad_in,
            };
        }
        Ok(Gradients {
            loss,
            layers: grads,
        })
    }
}
