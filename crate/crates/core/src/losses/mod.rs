//! Distillation objectives between a frozen teacher and its student, plus the
//! margin cross-entropy used for supervised training.
//!
//! Every loss has a value-only form and a `*_grad` form returning the
//! gradient w.r.t. the student-side input. Teacher tensors are constants.

mod ckd;
mod config;
mod gpkd;
mod id;
mod msfd;
mod objective;

pub use ckd::{ckd_loss, ckd_loss_grad};
pub use config::{total_loss, LossBreakdown, LossConfig, LossMask};
pub use gpkd::{gpkd_loss, gpkd_loss_grad};
pub use id::{id_margin_loss, id_margin_loss_grad};
pub use msfd::{msfd_loss, msfd_loss_grad, pool_normalize, pool_normalize_backward, pool_normalize_with};
pub use objective::{distillation_objective, DistillationGrads};

use ndarray::ArrayView2;

use crate::{Error, Result};

pub(crate) fn check_pair_shapes(student: &ArrayView2<f64>, teacher: &ArrayView2<f64>) -> Result<()> {
    if student.dim() != teacher.dim() {
        return Err(Error::validation(format!(
            "student embeddings {:?} and teacher embeddings {:?} differ in shape",
            student.dim(),
            teacher.dim()
        )));
    }
    if student.nrows() == 0 {
        return Err(Error::validation("at least one sample is required"));
    }
    Ok(())
}

pub(crate) fn unit_rows(m: &ArrayView2<f64>, eps: f64) -> Vec<Vec<f64>> {
    m.rows()
        .into_iter()
        .map(|r| crate::nn::l2_normalize(&r.to_vec(), eps))
        .collect()
}
