use ndarray::{Array2, ArrayView2};

use crate::nn::{log_sum_exp, softmax};
use crate::{Error, Result};

/// Mean softmax cross-entropy over (margin) logits.
pub fn id_margin_loss(logits: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    id_margin_loss_grad(logits, labels).map(|(v, _)| v)
}

/// Value and gradient w.r.t. the logits.
pub fn id_margin_loss_grad(logits: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (b, k) = logits.dim();
    if b == 0 || labels.len() != b {
        return Err(Error::validation(format!(
            "{} labels for {b} logit rows",
            labels.len()
        )));
    }
    if let Some(&index) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::Index { index, len: k });
    }
    let mut total = 0.0;
    let mut grad = Array2::zeros((b, k));
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i).to_vec();
        total += log_sum_exp(&row) - row[y];
        for (j, p) in softmax(&row).into_iter().enumerate() {
            grad[[i, j]] = (p - if j == y { 1.0 } else { 0.0 }) / b as f64;
        }
    }
    Ok((total / b as f64, grad))
}
