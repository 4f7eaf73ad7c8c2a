//! Command-line harness for sparse Sobolev GNN experiments.
//!
//! Every subcommand resolves its parameters (flags > `--config` file >
//! defaults), writes `manifest.txt` into `--out-dir`, and emits CSV/JSON
//! outputs there. Exit codes: `0` success, `1` a checked property or bound
//! failed, `2` usage or input error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod bench;
mod commands;
pub mod error;
pub mod memory;
pub mod settings;
pub mod verify;

pub use error::{CliError, CliResult};
pub use settings::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "s2gnn", version, about = "Sparse Sobolev GNN experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory for the manifest and all outputs
    #[arg(long, global = true, default_value = "s2gnn-out")]
    pub out_dir: PathBuf,

    /// Plain-text key=value file (a previous manifest works)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run property suites and report measured extremes as JSON
    Verify {
        #[arg(long, value_enum)]
        suite: Option<verify::Suite>,
    },

    /// Build a k-nearest-neighbour graph from a feature CSV
    Knn {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Output graph file (default: <out-dir>/knn.graph)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Kernel width, or `auto`
        #[arg(long)]
        bandwidth: Option<String>,
    },

    /// Train an S2-GNN (or the GCN baseline) and emit a TrainReport
    Train(Box<TrainArgs>),

    /// Sparsity of dense versus Hadamard Sobolev terms per order
    Sparsity {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        rho_max: Option<u32>,
        #[arg(long)]
        dense_cap: Option<usize>,
    },

    /// Forward-pass timing and peak memory on random graphs
    Bench {
        /// Comma-separated node counts
        #[arg(long)]
        nodes: Option<String>,
        /// Comma-separated edge probabilities
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        alpha: Option<usize>,
        /// Comma-separated subset of s2gnn, s2gnn_alpha1, gcn
        #[arg(long)]
        models: Option<String>,
    },

    /// Randomized perturbation-stability sweep
    Stability(StabilityArgs),

    /// Homophily index of a labelled graph
    Homophily {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },

    /// Normalized spectra of dense and Hadamard Laplacian powers
    Curves {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        rho_max: Option<u32>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Edge-list file; without it a stochastic block model is generated
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Split CSV; without it `--split` fractions are drawn
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// train,val,test fractions
    #[arg(long)]
    pub split: Option<String>,

    #[arg(long)]
    pub sbm_nodes: Option<usize>,
    #[arg(long)]
    pub sbm_blocks: Option<usize>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,

    #[arg(long, value_parser = ["gcn", "none"])]
    pub baseline: Option<String>,
    #[arg(long)]
    pub ablation_hadamard_off: bool,
    #[arg(long)]
    pub ablation_regular_norm: bool,
    /// linear, mlp or disabled
    #[arg(long)]
    pub fusion: Option<String>,
    #[arg(long)]
    pub alpha: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n_layers: Option<usize>,
    /// Comma-separated layer widths; the last is the class count
    #[arg(long)]
    pub hidden_units: Option<String>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub dense_cap: Option<usize>,
    /// Save the selected model to this directory
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub rhos: Option<String>,
    #[arg(long)]
    pub p_values: Option<String>,
    #[arg(long)]
    pub epsilons: Option<String>,
    #[arg(long)]
    pub snrs_db: Option<String>,
    #[arg(long)]
    pub n_nodes: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// relu or identity
    #[arg(long)]
    pub activation: Option<String>,
    /// Use 10 seeds per cell
    #[arg(long)]
    pub quick: bool,
}

/// Runs one subcommand. Outputs are written before a violation is
/// reported.
pub fn run(cli: &Cli) -> CliResult<()> {
    commands::dispatch(cli)
}
