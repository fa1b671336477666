use ndarray::{Array3, Array4, ArrayView3, Axis};

use crate::model::BatchFeatures;
use crate::nn::{l2_normalize, l2_normalize_backward, NORM_EPSILON};
use crate::{Error, Result};

/// Channel-mean attention map of a `(C, H, W)` stage map, flattened to
/// `H * W` and L2-normalized. An all-zero pooled map yields the zero vector.
pub fn pool_normalize(stage_map: ArrayView3<f64>) -> Vec<f64> {
    pool_normalize_with(stage_map, NORM_EPSILON)
}

pub fn pool_normalize_with(stage_map: ArrayView3<f64>, eps: f64) -> Vec<f64> {
    l2_normalize(&channel_mean(stage_map), eps)
}

fn channel_mean(stage_map: ArrayView3<f64>) -> Vec<f64> {
    stage_map
        .mean_axis(Axis(0))
        .expect("at least one channel")
        .iter()
        .copied()
        .collect()
}

/// Gradient w.r.t. the `(C, H, W)` map given the gradient w.r.t. the
/// normalized attention vector.
pub fn pool_normalize_backward(stage_map: ArrayView3<f64>, grad_unit: &[f64], eps: f64) -> Array3<f64> {
    let (c, h, w) = stage_map.dim();
    let pooled = channel_mean(stage_map);
    let grad_pooled = l2_normalize_backward(&pooled, grad_unit, eps);
    Array3::from_shape_fn((c, h, w), |(_, y, x)| grad_pooled[y * w + x] / c as f64)
}

fn check_stacks(student: &BatchFeatures, teacher: &BatchFeatures) -> Result<()> {
    if student.stage_count() != teacher.stage_count() {
        return Err(Error::validation("student and teacher stage counts differ"));
    }
    if student.stage_count() < 2 {
        return Err(Error::validation("feature distillation needs at least two stages"));
    }
    for (l, (s, t)) in student.stage_maps.iter().zip(&teacher.stage_maps).enumerate() {
        if s.dim() != t.dim() {
            return Err(Error::validation(format!(
                "stage {} shape {:?} vs teacher {:?}",
                l + 1,
                s.dim(),
                t.dim()
            )));
        }
        if s.dim().0 == 0 {
            return Err(Error::validation("at least one sample is required"));
        }
    }
    Ok(())
}

/// Mean over samples and stages `2..=L` of the squared distance between
/// student and teacher attention vectors. Stage 1 never contributes.
pub fn msfd_loss(student: &BatchFeatures, teacher: &BatchFeatures) -> Result<f64> {
    msfd_impl(student, teacher, NORM_EPSILON, false).map(|(v, _)| v)
}

/// Value and per-stage gradients (`None` for stage 1).
pub fn msfd_loss_grad(
    student: &BatchFeatures,
    teacher: &BatchFeatures,
    eps: f64,
) -> Result<(f64, Vec<Option<Array4<f64>>>)> {
    msfd_impl(student, teacher, eps, true)
}

fn msfd_impl(
    student: &BatchFeatures,
    teacher: &BatchFeatures,
    eps: f64,
    want_grad: bool,
) -> Result<(f64, Vec<Option<Array4<f64>>>)> {
    check_stacks(student, teacher)?;
    let n = student.stage_maps[0].dim().0;
    let stages = student.stage_count();
    let norm = 1.0 / (n * (stages - 1)) as f64;
    let mut total = 0.0;
    let mut grads = vec![None];
    for l in 1..stages {
        let (s_maps, t_maps) = (&student.stage_maps[l], &teacher.stage_maps[l]);
        let mut grad = want_grad.then(|| Array4::zeros(s_maps.dim()));
        for i in 0..n {
            let s_map = s_maps.index_axis(Axis(0), i);
            let us = pool_normalize_with(s_map, eps);
            let ut = pool_normalize_with(t_maps.index_axis(Axis(0), i), eps);
            let diff: Vec<f64> = us.iter().zip(&ut).map(|(a, b)| a - b).collect();
            total += diff.iter().map(|d| d * d).sum::<f64>();
            if let Some(g) = grad.as_mut() {
                let grad_unit: Vec<f64> = diff.iter().map(|d| 2.0 * norm * d).collect();
                g.index_axis_mut(Axis(0), i)
                    .assign(&pool_normalize_backward(s_map, &grad_unit, eps));
            }
        }
        grads.push(grad);
    }
    Ok((total * norm, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn stack(maps: Vec<Array4<f64>>) -> BatchFeatures {
        let n = maps[0].dim().0;
        BatchFeatures {
            stage_maps: maps,
            embeddings: Array2::zeros((n, 1)),
        }
    }

    #[test]
    fn identical_channels_reduce_to_the_plane() {
        let plane = array![[1.0, 2.0], [3.0, 4.0]];
        let map = ndarray::stack(Axis(0), &[plane.view(), plane.view(), plane.view()]).unwrap();
        let expected = l2_normalize(&[1.0, 2.0, 3.0, 4.0], NORM_EPSILON);
        let got = pool_normalize(map.view());
        assert!(got.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn two_channel_hand_example() {
        let map = array![[[1.0, 3.0]], [[3.0, 1.0]]];
        let got = pool_normalize(map.view());
        let r = 1.0 / 2f64.sqrt();
        assert!((got[0] - r).abs() < 1e-12 && (got[1] - r).abs() < 1e-12);
    }

    #[test]
    fn zero_map_is_zero_vector() {
        let got = pool_normalize(Array3::<f64>::zeros((4, 2, 3)).view());
        assert!(got.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identical_stacks_give_zero() {
        let maps = vec![
            Array4::from_shape_fn((2, 3, 2, 2), |(a, b, c, d)| (a + b * c + d) as f64),
            Array4::from_shape_fn((2, 2, 1, 2), |(a, b, _, d)| (a * 2 + b + d) as f64 - 1.5),
        ];
        let s = stack(maps);
        assert_eq!(msfd_loss(&s, &s.clone()).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_attention_gives_two() {
        let first = Array4::zeros((1, 1, 1, 2));
        let s = stack(vec![first.clone(), array![[[[1.0, 0.0]]]]]);
        let t = stack(vec![first, array![[[[0.0, 1.0]]]]]);
        assert!((msfd_loss(&s, &t).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn first_stage_is_ignored() {
        let a = stack(vec![Array4::from_elem((1, 1, 2, 2), 1.0), Array4::from_elem((1, 1, 1, 1), 1.0)]);
        let mut b = a.clone();
        b.stage_maps[0][[0, 0, 0, 1]] = -7.0;
        assert_eq!(msfd_loss(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = stack(vec![Array4::zeros((1, 1, 2, 2)), Array4::zeros((1, 1, 1, 1))]);
        let b = stack(vec![Array4::zeros((1, 1, 2, 2)), Array4::zeros((1, 2, 1, 1))]);
        assert!(matches!(msfd_loss(&a, &b), Err(Error::Validation(_))));
    }
}
