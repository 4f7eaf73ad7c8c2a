use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::sobolev::ShiftBank;
use crate::sparse_core::Dense;

use super::loss::masked_cross_entropy;
use super::model::Model;

/// Denominator floor of the relative error, so entries whose true
/// gradient is (numerically) zero are judged on absolute error.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub worst_tensor: String,
    pub entries_checked: usize,
}

/// Compares [`Model::backward`] with central differences of step `h` on
/// every parameter entry. With `dropout_seed = Some(s)` each evaluation
/// replays the same dropout masks.
pub fn gradient_check<T: Scalar>(
    model: &Model<T>,
    bank: &ShiftBank<T>,
    x: &Dense<T>,
    labels: &[usize],
    mask: &[bool],
    h: f64,
    dropout_seed: Option<u64>,
) -> Result<GradientCheck> {
    let objective = |m: &Model<T>| -> Result<T> {
        let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
        let pass = m.forward_pass(bank, x, rng.as_mut())?;
        Ok(masked_cross_entropy(&pass.log_probs, labels, mask)?
            + T::lit(m.config().weight_decay) * m.weight_penalty())
    };
    let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let pass = model.forward_pass(bank, x, rng.as_mut())?;
    let grads = model.backward(bank, &pass, labels, mask)?;
    let orders = model.config().branch_orders();

    let step = T::lit(h);
    let two_h = T::lit(2.0 * h);
    let mut probe = model.clone();
    let mut worst = GradientCheck {
        max_relative_error: 0.0,
        worst_tensor: String::new(),
        entries_checked: 0,
    };
    for (l, layer) in model.layers().iter().enumerate() {
        let names = layer.layout(&orders);
        let analytic = grads.layers[l].tensors();
        for (t, values) in layer.tensors().iter().enumerate() {
            for i in 0..values.len() {
                probe.layers_mut()[l].tensors_mut()[t][i] = values[i] + step;
                let up = objective(&probe)?;
                probe.layers_mut()[l].tensors_mut()[t][i] = values[i] - step;
                let down = objective(&probe)?;
                probe.layers_mut()[l].tensors_mut()[t][i] = values[i];

                let numeric = ((up - down) / two_h).as_f64();
                let exact = analytic[t][i].as_f64();
                let rel =
                    (numeric - exact).abs() / numeric.abs().max(exact.abs()).max(GRADCHECK_FLOOR);
                worst.entries_checked += 1;
                if rel > worst.max_relative_error || worst.entries_checked == 1 {
                    worst.max_relative_error = rel;
                    worst.worst_tensor = format!("layer{l}_{}[{i}]", names[t].name);
                }
            }
        }
    }
    Ok(worst)
}
