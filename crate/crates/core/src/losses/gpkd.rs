use ndarray::{Array2, ArrayView2};

use super::{check_pair_shapes, unit_rows};
use crate::nn::{dot, l2_normalize_backward, NORM_EPSILON};
use crate::Result;

/// Mean of `1 - cos(student_i, teacher_i)`; lies in `[0, 2]`.
pub fn gpkd_loss(student: ArrayView2<f64>, teacher: ArrayView2<f64>) -> Result<f64> {
    gpkd_loss_grad(student, teacher, NORM_EPSILON).map(|(v, _)| v)
}

pub fn gpkd_loss_grad(
    student: ArrayView2<f64>,
    teacher: ArrayView2<f64>,
    eps: f64,
) -> Result<(f64, Array2<f64>)> {
    check_pair_shapes(&student, &teacher)?;
    let n = student.nrows();
    let us = unit_rows(&student, eps);
    let ut = unit_rows(&teacher, eps);
    let mut total = 0.0;
    let mut grad = Array2::zeros(student.dim());
    for i in 0..n {
        total += 1.0 - dot(&us[i], &ut[i]);
        let grad_unit: Vec<f64> = ut[i].iter().map(|t| -t / n as f64).collect();
        let g = l2_normalize_backward(&student.row(i).to_vec(), &grad_unit, eps);
        grad.row_mut(i).assign(&ndarray::ArrayView1::from(&g));
    }
    // Rounding can push 1 - cos a few ulps outside [0, 2].
    Ok(((total / n as f64).clamp(0.0, 2.0), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn equal_orthogonal_and_opposite() {
        let t = array![[1.0, 2.0, -1.0], [0.5, 0.0, 3.0]];
        assert!(gpkd_loss(t.view(), t.view()).unwrap().abs() < 1e-12);
        let neg = -&t;
        assert!((gpkd_loss(neg.view(), t.view()).unwrap() - 2.0).abs() < 1e-12);
        let a = array![[1.0, 0.0], [0.0, 2.0]];
        let b = array![[0.0, 3.0], [-1.0, 0.0]];
        assert!((gpkd_loss(a.view(), b.view()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_shapes() {
        let a = array![[1.0, 0.0]];
        let b = array![[1.0, 0.0, 0.0]];
        assert!(gpkd_loss(a.view(), b.view()).is_err());
    }
}
