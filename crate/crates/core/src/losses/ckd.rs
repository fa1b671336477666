use ndarray::{Array2, ArrayView2};

use super::{check_pair_shapes, unit_rows};
use crate::nn::{dot, l2_normalize_backward, log_sum_exp, softmax, NORM_EPSILON};
use crate::{Error, Result};

/// In-batch contrastive distillation: row `i` of the student must pick its own
/// teacher row among all teacher rows of the batch,
/// `-(1/B) sum_i log softmax_k(<s_i, t_k> / tau)[i]`.
pub fn ckd_loss(student: ArrayView2<f64>, teacher: ArrayView2<f64>, tau: f64) -> Result<f64> {
    ckd_loss_grad(student, teacher, tau, NORM_EPSILON).map(|(v, _)| v)
}

pub fn ckd_loss_grad(
    student: ArrayView2<f64>,
    teacher: ArrayView2<f64>,
    tau: f64,
    eps: f64,
) -> Result<(f64, Array2<f64>)> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::config(format!("temperature must be positive, got {tau}")));
    }
    check_pair_shapes(&student, &teacher)?;
    let b = student.nrows();
    let d = student.ncols();
    let us = unit_rows(&student, eps);
    let ut = unit_rows(&teacher, eps);
    let mut total = 0.0;
    let mut grad = Array2::zeros(student.dim());
    for i in 0..b {
        let logits: Vec<f64> = ut.iter().map(|t| dot(&us[i], t) / tau).collect();
        total += log_sum_exp(&logits) - logits[i];
        let probs = softmax(&logits);
        let mut grad_unit = vec![0.0; d];
        for (k, t) in ut.iter().enumerate() {
            let coeff = (probs[k] - if k == i { 1.0 } else { 0.0 }) / (tau * b as f64);
            grad_unit.iter_mut().zip(t).for_each(|(g, tv)| *g += coeff * tv);
        }
        let g = l2_normalize_backward(&student.row(i).to_vec(), &grad_unit, eps);
        grad.row_mut(i).assign(&ndarray::ArrayView1::from(&g));
    }
    Ok(((total / b as f64).max(0.0), grad))
}
