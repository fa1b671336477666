//! Dense numeric kernels shared by the backbone and the losses.
//!
//! Activations inside the backbone use a channel-major `(C, B, H, W)` layout so
//! a 3x3 convolution over the whole batch is a single matrix product.

mod conv;
mod pool;
mod sgd;

pub use conv::{col2im_3x3, im2col_3x3, KERNEL_AREA};
pub use pool::{avg_pool_2x2, avg_pool_2x2_backward};
pub use sgd::{Sgd, SgdConfig};

/// Guard used by every normalization in the crate.
pub const NORM_EPSILON: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `v / max(||v||, eps)`; the zero vector maps to the zero vector.
pub fn l2_normalize(v: &[f64], eps: f64) -> Vec<f64> {
    let denom = l2_norm(v).max(eps);
    v.iter().map(|x| x / denom).collect()
}

/// Pull a gradient w.r.t. `u = v / max(||v||, eps)` back to `v`.
pub fn l2_normalize_backward(v: &[f64], grad_u: &[f64], eps: f64) -> Vec<f64> {
    let norm = l2_norm(v);
    if norm <= eps {
        return grad_u.iter().map(|g| g / eps).collect();
    }
    let proj = dot(v, grad_u) / (norm * norm);
    v.iter()
        .zip(grad_u)
        .map(|(x, g)| (g - x * proj) / norm)
        .collect()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(values: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(values);
    values.iter().map(|v| (v - lse).exp()).collect()
}
