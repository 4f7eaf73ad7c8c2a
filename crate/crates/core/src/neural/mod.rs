//! S2-GNN layers, fusion, the GCN baseline, masked cross-entropy with exact
//! gradients, Adam, the training loop and checkpoints.

mod checkpoint;
mod config;
mod gradcheck;
mod layers;
mod loss;
mod model;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, MANIFEST_FILE};
pub use config::{Fusion, ModelConfig, MAX_ALPHA};
pub use gradcheck::{gradient_check, GradientCheck, GRADCHECK_FLOOR};
pub use layers::{branch_forward, fuse_linear, fuse_mlp, gcn_layer, gcn_operator, Activation};
pub use loss::{cross_entropy_grad, log_softmax, masked_accuracy, masked_cross_entropy};
pub use model::{ForwardPass, Gradients, LayerParams, Model, TensorInfo};
pub use optim::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use train::{
    bank_for_config, gcn_config, train, train_gcn_baseline, train_with_bank, EpochMetrics,
    TrainOutcome, TrainReport, Variant,
};
