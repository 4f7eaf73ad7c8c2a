use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::Dense;

/// Row-wise `z − logsumexp(z)`.
pub fn log_softmax<T: Scalar>(z: &Dense<T>) -> Dense<T> {
    let mut out = z.clone();
    for i in 0..out.n_rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
    out
}

fn check_inputs<T: Scalar>(log_probs: &Dense<T>, labels: &[usize], mask: &[bool]) -> Result<usize> {
    let n = log_probs.n_rows();
    if labels.len() != n || mask.len() != n {
        return Err(Error::DimensionMismatch {
            op: "masked loss",
            left: log_probs.shape(),
            right: (labels.len(), mask.len()),
        });
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    if let Some(i) = (0..n).find(|&i| mask[i] && labels[i] >= log_probs.n_cols()) {
        return Err(Error::InvalidArgument(format!(
            "label {} of node {i} exceeds {} classes",
            labels[i],
            log_probs.n_cols()
        )));
    }
    Ok(count)
}

/// Mean negative log-likelihood over the masked nodes.
pub fn masked_cross_entropy<T: Scalar>(
    log_probs: &Dense<T>,
    labels: &[usize],
    mask: &[bool],
) -> Result<T> {
    let count = check_inputs(log_probs, labels, mask)?;
    let total: T = (0..labels.len())
        .filter(|&i| mask[i])
        .map(|i| -log_probs[(i, labels[i])])
        .sum();
    Ok(total / T::from_usize_lossy(count))
}

/// Gradient of [`masked_cross_entropy`] w.r.t. the pre-softmax logits:
/// `(softmax − onehot) / |mask|` on masked rows, zero elsewhere.
pub fn cross_entropy_grad<T: Scalar>(
    log_probs: &Dense<T>,
    labels: &[usize],
    mask: &[bool],
) -> Result<Dense<T>> {
    let count = T::from_usize_lossy(check_inputs(log_probs, labels, mask)?);
    let mut grad = Dense::zeros(log_probs.n_rows(), log_probs.n_cols());
    for i in (0..labels.len()).filter(|&i| mask[i]) {
        for (c, g) in grad.row_mut(i).iter_mut().enumerate() {
            let p = log_probs[(i, c)].exp();
            let target = if c == labels[i] { T::one() } else { T::zero() };
            *g = (p - target) / count;
        }
    }
    Ok(grad)
}

/// Fraction of masked nodes whose arg-max class (lowest index on ties)
/// equals the label.
pub fn masked_accuracy<T: Scalar>(
    scores: &Dense<T>,
    labels: &[usize],
    mask: &[bool],
) -> Result<f64> {
    let count = check_inputs(scores, labels, mask)?;
    let correct = (0..labels.len())
        .filter(|&i| mask[i])
        .filter(|&i| {
            let row = scores.row(i);
            let best = (1..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            best == labels[i]
        })
        .count();
    Ok(correct as f64 / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let lp = log_softmax(&Dense::from_rows(&[vec![800.0, 0.0], vec![0.0, 800.0]]).unwrap());
        let loss = masked_cross_entropy(&lp, &[0, 1], &[true, true]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn uniform_logits_give_log_c() {
        let lp = log_softmax(&Dense::filled(4, 5, 0.3));
        let loss = masked_cross_entropy(&lp, &[0, 1, 2, 4], &[true; 4]).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn two_node_hand_case() {
        let z = Dense::from_rows(&[vec![1.0, 2.0], vec![0.5, -0.5]]).unwrap();
        let lp = log_softmax(&z);
        let loss = masked_cross_entropy(&lp, &[0, 0], &[true, true]).unwrap();
        let l0 = -(1f64.exp() / (1f64.exp() + 2f64.exp())).ln();
        let l1 = -(0.5f64.exp() / (0.5f64.exp() + (-0.5f64).exp())).ln();
        assert!((loss - 0.5 * (l0 + l1)).abs() < 1e-14);
        let only_first = masked_cross_entropy(&lp, &[0, 0], &[true, false]).unwrap();
        assert!((only_first - l0).abs() < 1e-14);
    }

    #[test]
    fn rows_normalize() {
        let z = Dense::<f64>::from_rows(&[vec![1e3, -1e3, 2.0], vec![0.1, 0.2, 0.3]]).unwrap();
        let lp = log_softmax(&z);
        for i in 0..2 {
            let lse: f64 = lp.row(i).iter().map(|v| v.exp()).sum::<f64>().ln();
            assert!(lse.abs() < 1e-12);
        }
    }

    #[test]
    fn errors_and_accuracy() {
        let lp = log_softmax(&Dense::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        assert!(matches!(
            masked_cross_entropy(&lp, &[0, 1], &[false, false]),
            Err(Error::EmptyMask)
        ));
        assert!(masked_cross_entropy(&lp, &[0, 2], &[true, true]).is_err());
        assert_eq!(masked_accuracy(&lp, &[0, 0], &[true, true]).unwrap(), 0.5);
        let tie = Dense::filled(1, 3, 0.0);
        assert_eq!(masked_accuracy(&tie, &[0], &[true]).unwrap(), 1.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let z = Dense::<f64>::from_rows(&[vec![0.3, -1.0, 2.0], vec![0.0, 0.5, 0.1]]).unwrap();
        let labels = [2, 0];
        let mask = [true, true];
        let g = cross_entropy_grad(&log_softmax(&z), &labels, &mask).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let mut zp = z.clone();
                zp.row_mut(i)[j] += h;
                let mut zm = z.clone();
                zm.row_mut(i)[j] -= h;
                let fd = (masked_cross_entropy(&log_softmax(&zp), &labels, &mask).unwrap()
                    - masked_cross_entropy(&log_softmax(&zm), &labels, &mask).unwrap())
                    / (2.0 * h);
                assert!((fd - g[(i, j)]).abs() < 1e-8);
            }
        }
    }
}
