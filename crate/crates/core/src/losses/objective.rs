use ndarray::{Array2, Array4};

use super::{ckd_loss_grad, gpkd_loss_grad, msfd_loss_grad, LossConfig};
use crate::model::BatchFeatures;
use crate::Result;

/// Gradients of the weighted distillation objective w.r.t. the student
/// features.
#[derive(Debug, Clone)]
pub struct DistillationGrads {
    pub stage_maps: Vec<Option<Array4<f64>>>,
    pub embeddings: Array2<f64>,
}

/// Unweighted `(msfd, gpkd, ckd)` plus gradients of
/// `lambda1 * msfd + lambda2 * gpkd + lambda3 * ckd`.
pub fn distillation_objective(
    student: &BatchFeatures,
    teacher: &BatchFeatures,
    config: &LossConfig,
) -> Result<((f64, f64, f64), DistillationGrads)> {
    config.validate()?;
    let (msfd, mut map_grads) = msfd_loss_grad(student, teacher, config.epsilon)?;
    let (gpkd, gpkd_grad) = gpkd_loss_grad(student.embeddings.view(), teacher.embeddings.view(), config.epsilon)?;
    let (ckd, ckd_grad) = ckd_loss_grad(
        student.embeddings.view(),
        teacher.embeddings.view(),
        config.tau,
        config.epsilon,
    )?;
    for g in map_grads.iter_mut().flatten() {
        *g *= config.lambda1;
    }
    let embeddings = gpkd_grad * config.lambda2 + ckd_grad * config.lambda3;
    Ok((
        (msfd, gpkd, ckd),
        DistillationGrads {
            stage_maps: map_grads,
            embeddings,
        },
    ))
}
