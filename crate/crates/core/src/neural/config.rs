use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse_core::DEFAULT_DENSE_CAP;

/// Largest supported branch count.
pub const MAX_ALPHA: usize = 6;

/// How branch embeddings are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    /// `Σ_i μ_i B_i` with learned scalars.
    #[default]
    Linear,
    /// `[B_0, …, B_α] W_MLP`.
    Mlp,
    /// Only the `ρ = 1` branch runs and its output is used directly
    /// (requires `α = 1`); this is the GCN special case.
    Disabled,
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fusion::Linear => "linear",
            Fusion::Mlp => "mlp",
            Fusion::Disabled => "disabled",
        })
    }
}

impl FromStr for Fusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Fusion::Linear),
            "mlp" => Ok(Fusion::Mlp),
            "disabled" | "none" => Ok(Fusion::Disabled),
            other => Err(Error::InvalidArgument(format!(
                "unknown fusion mode '{other}'"
            ))),
        }
    }
}

/// Architecture and optimizer settings.
///
/// `hidden_units[l]` is the output width of layer `l`; the last entry is the
/// number of classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha: usize,
    pub epsilon: f64,
    pub n_layers: usize,
    pub hidden_units: Vec<usize>,
    pub fusion: Fusion,
    pub dropout: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub ablation_hadamard_off: bool,
    pub ablation_regular_norm: bool,
    pub dense_cap: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            alpha: 3,
            epsilon: 1.0,
            n_layers: 2,
            hidden_units: vec![16, 2],
            fusion: Fusion::Linear,
            dropout: 0.5,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            max_epochs: 200,
            seed: 0,
            ablation_hadamard_off: false,
            ablation_regular_norm: false,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid value '{value}' for '{key}'")))
}

impl ModelConfig {
    /// Defaults with `n_layers − 1` hidden layers of width `hidden` and an
    /// output layer of width `n_classes`.
    pub fn with_widths(n_layers: usize, hidden: usize, n_classes: usize) -> Self {
        let mut hidden_units = vec![hidden; n_layers.saturating_sub(1)];
        hidden_units.push(n_classes);
        Self {
            n_layers,
            hidden_units,
            ..Self::default()
        }
    }

    /// Output width of the last layer.
    pub fn n_classes(&self) -> usize {
        self.hidden_units.last().copied().unwrap_or(0)
    }

    /// Powers used by the branches of every layer.
    pub fn branch_orders(&self) -> Vec<usize> {
        match self.fusion {
            Fusion::Disabled => vec![1],
            _ => (0..=self.alpha).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(1..=MAX_ALPHA).contains(&self.alpha) {
            return bad(format!(
                "alpha must be in 1..={MAX_ALPHA}, got {}",
                self.alpha
            ));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.n_layers == 0 || self.hidden_units.len() != self.n_layers {
            return bad(format!(
                "hidden_units has {} entries for {} layers",
                self.hidden_units.len(),
                self.n_layers
            ));
        }
        if self.hidden_units.contains(&0) {
            return bad("layer widths must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("invalid learning rate {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return bad(format!("invalid weight decay {}", self.weight_decay));
        }
        if self.fusion == Fusion::Disabled && self.alpha != 1 {
            return bad("fusion=disabled requires alpha=1".into());
        }
        if self.ablation_hadamard_off && self.ablation_regular_norm {
            return bad("the two ablations are mutually exclusive".into());
        }
        Ok(())
    }

    /// Sets one field from its `key=value` spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "alpha" => self.alpha = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "n_layers" => self.n_layers = parse(key, value)?,
            "hidden_units" => {
                self.hidden_units = value
                    .split(',')
                    .map(|v| parse(key, v))
                    .collect::<Result<_>>()?
            }
            "fusion" => self.fusion = value.parse()?,
            "dropout" => self.dropout = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "ablation_hadamard_off" => self.ablation_hadamard_off = parse(key, value)?,
            "ablation_regular_norm" => self.ablation_regular_norm = parse(key, value)?,
            "dense_cap" => self.dense_cap = parse(key, value)?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model key '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// All fields as `key=value` pairs, readable by [`ModelConfig::set`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let hidden: Vec<String> = self.hidden_units.iter().map(ToString::to_string).collect();
        vec![
            ("alpha", self.alpha.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("n_layers", self.n_layers.to_string()),
            ("hidden_units", hidden.join(",")),
            ("fusion", self.fusion.to_string()),
            ("dropout", self.dropout.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("weight_decay", self.weight_decay.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("seed", self.seed.to_string()),
            (
                "ablation_hadamard_off",
                self.ablation_hadamard_off.to_string(),
            ),
            (
                "ablation_regular_norm",
                self.ablation_regular_norm.to_string(),
            ),
            ("dense_cap", self.dense_cap.to_string()),
        ]
    }

    pub const KEYS: [&'static str; 13] = [
        "alpha",
        "epsilon",
        "n_layers",
        "hidden_units",
        "fusion",
        "dropout",
        "learning_rate",
        "weight_decay",
        "max_epochs",
        "seed",
        "ablation_hadamard_off",
        "ablation_regular_norm",
        "dense_cap",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        let mut d = ModelConfig {
            alpha: 1,
            seed: 99,
            ..ModelConfig::default()
        };
        for (k, v) in c.entries() {
            d.set(k, &v).unwrap();
        }
        assert_eq!(c, d);
        assert_eq!(ModelConfig::KEYS.len(), c.entries().len());
    }

    #[test]
    fn invalid_configs() {
        let check = |f: fn(&mut ModelConfig)| {
            let mut c = ModelConfig::default();
            f(&mut c);
            assert!(c.validate().is_err(), "{c:?}");
        };
        check(|c| c.alpha = 0);
        check(|c| c.alpha = 7);
        check(|c| c.epsilon = 0.0);
        check(|c| c.hidden_units = vec![4]);
        check(|c| c.dropout = 1.0);
        check(|c| c.fusion = Fusion::Disabled);
        check(|c| {
            c.ablation_hadamard_off = true;
            c.ablation_regular_norm = true;
        });
        assert!(ModelConfig::default().set("nope", "1").is_err());
        assert!(ModelConfig::default().set("alpha", "x").is_err());
    }

    #[test]
    fn widths_helper() {
        let c = ModelConfig::with_widths(3, 8, 5);
        assert_eq!(c.hidden_units, vec![8, 8, 5]);
        assert_eq!(c.n_classes(), 5);
        assert_eq!(c.branch_orders(), vec![0, 1, 2, 3]);
    }
}
