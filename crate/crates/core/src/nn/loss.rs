use ndarray::{Array2, ArrayView2, Axis};

use super::Real;
use crate::error::{contract, Result};

/// Row-wise softmax in place, stabilized by subtracting each row's max.
pub fn softmax_rows<F: Real>(z: &mut Array2<F>) {
    for mut row in z.rows_mut() {
        let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Mean categorical cross-entropy of `softmax(logits)` against class indices.
///
/// Returns the loss and its gradient with respect to the logits,
/// `(softmax − onehot) / batch`.
pub fn cross_entropy<F: Real>(
    logits: ArrayView2<'_, F>,
    classes: &[usize],
) -> Result<(F, Array2<F>)> {
    let (batch, width) = logits.dim();
    contract!(batch > 0, "empty batch");
    contract!(
        classes.len() == batch,
        "{} labels for a batch of {batch}",
        classes.len()
    );
    if let Some(&bad) = classes.iter().find(|&&c| c >= width) {
        return Err(crate::Error::Contract(format!(
            "class index {bad} out of range for {width} classes"
        )));
    }
    let inv_batch = F::one() / F::lit(batch as f64);
    let mut grad = logits.to_owned();
    let mut loss = F::zero();
    for (mut row, &class) in grad.axis_iter_mut(Axis(0)).zip(classes) {
        let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        let log_sum = row.iter().map(|&v| (v - max).exp()).sum::<F>().ln() + max;
        loss = loss + (log_sum - row[class]);
        row.mapv_inplace(|v| (v - log_sum).exp() * inv_batch);
        row[class] = row[class] - inv_batch;
    }
    Ok((loss * inv_batch, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_logits_give_log_classes() {
        let logits = Array2::<f64>::from_elem((3, 7), 0.25);
        let (loss, _) = cross_entropy(logits.view(), &[0, 3, 6]).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_logits_give_near_zero_loss() {
        let logits = array![[30.0, -30.0, -30.0], [-30.0, -30.0, 30.0]];
        let (loss, _) = cross_entropy(logits.view(), &[0, 2]).unwrap();
        assert!(loss < 1e-9);
    }

    #[test]
    fn invalid_class_rejected() {
        let logits = Array2::<f64>::zeros((2, 3));
        assert!(cross_entropy(logits.view(), &[0, 3]).is_err());
        assert!(cross_entropy(logits.view(), &[0]).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut z = array![[1000.0, 1001.0, 999.0], [-5.0, 0.0, 5.0]];
        softmax_rows(&mut z);
        for row in z.rows() {
            assert!((row.sum() - 1.0_f64).abs() < 1e-12);
        }
    }
}
