//! Checkpoint directory layout:
//!
//! * `manifest.txt` — `key=value` lines: `format`, `in_dim` and every
//!   [`ModelConfig`] field.
//! * `layer{l}_{tensor}.csv` — one matrix CSV per parameter tensor, with
//!   tensor names `w{ρ}`, `b{ρ}`, `mu`, `mlp`. Vectors are stored as a
//!   single row.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graphgen::io::{load_matrix, save_matrix};
use crate::scalar::Scalar;
use crate::sparse_core::Dense;

use super::config::ModelConfig;
use super::model::Model;

pub const CHECKPOINT_FORMAT: &str = "s2gnn-checkpoint-1";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = format!("format={CHECKPOINT_FORMAT}\nin_dim={}\n", model.in_dim());
    for (k, v) in model.config().entries() {
        manifest.push_str(&format!("{k}={v}\n"));
    }
    fs::write(dir.join(MANIFEST_FILE), manifest)?;
    let orders = model.config().branch_orders();
    for (l, layer) in model.layers().iter().enumerate() {
        for (info, values) in layer.layout(&orders).into_iter().zip(layer.tensors()) {
            let m = Dense::from_vec(info.rows, info.cols, values.to_vec())?;
            save_matrix(&m, "c", &dir.join(format!("layer{l}_{}.csv", info.name)))?;
        }
    }
    Ok(())
}

pub fn load_checkpoint<T: Scalar + FromStr>(dir: &Path) -> Result<Model<T>> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let source = manifest_path.display().to_string();
    let text = fs::read_to_string(&manifest_path)?;
    let mut config = ModelConfig::default();
    let mut in_dim = None;
    let mut format = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_error = |message: String| Error::Parse {
            source_name: source.clone(),
            line: idx as u64 + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(format!("expected key=value, got {line:?}")))?;
        match key {
            "format" => format = Some(value.to_string()),
            "in_dim" => {
                in_dim = Some(
                    value
                        .parse()
                        .map_err(|_| parse_error(format!("bad in_dim {value:?}")))?,
                )
            }
            _ => config
                .set(key, value)
                .map_err(|e| parse_error(e.to_string()))?,
        }
    }
    if format.as_deref() != Some(CHECKPOINT_FORMAT) {
        return Err(Error::InvalidArgument(format!(
            "{source}: not a {CHECKPOINT_FORMAT} manifest"
        )));
    }
    let in_dim =
        in_dim.ok_or_else(|| Error::InvalidArgument(format!("{source}: missing in_dim")))?;
    let mut model = Model::<T>::zeros(config, in_dim)?;
    let orders = model.config().branch_orders();
    for (l, layer) in model.layers_mut().iter_mut().enumerate() {
        let layout = layer.layout(&orders);
        for (info, slot) in layout.into_iter().zip(layer.tensors_mut()) {
            let path = dir.join(format!("layer{l}_{}.csv", info.name));
            let m: Dense<T> = load_matrix(&path)?;
            if m.shape() != (info.rows, info.cols) {
                return Err(Error::DimensionMismatch {
                    op: "checkpoint tensor",
                    left: (info.rows, info.cols),
                    right: m.shape(),
                });
            }
            slot.copy_from_slice(m.values());
        }
    }
    Ok(model)
}
