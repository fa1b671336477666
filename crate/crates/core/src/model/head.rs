use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::nn::{l2_normalize, l2_normalize_backward, NORM_EPSILON};
use crate::{Error, Result};

/// Below this `sin(angle)` the target-logit derivative is evaluated at the
/// guard value instead of dividing by zero.
const SIN_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginHeadConfig {
    pub num_classes: usize,
    pub scale: f64,
    /// Additive angular margin, in radians.
    pub margin: f64,
}

impl MarginHeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::config("margin head needs at least one class"));
        }
        if !(self.scale > 0.0) {
            return Err(Error::config("margin scale must be positive"));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.margin) {
            return Err(Error::config("margin must lie in [0, pi/2)"));
        }
        Ok(())
    }
}

/// Cosine classifier with an additive angular margin on the target class.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginHead {
    pub config: MarginHeadConfig,
    /// `(num_classes, d)` class centres; normalized on every use.
    pub weight: Array2<f64>,
}

/// Logits plus the normalized operands needed for the backward pass.
#[derive(Debug, Clone)]
pub struct MarginLogits {
    pub logits: Array2<f64>,
    pub cosines: Array2<f64>,
    unit_embeddings: Array2<f64>,
    unit_weights: Array2<f64>,
}

fn normalize_rows(m: ArrayView2<f64>) -> Array2<f64> {
    let mut out = m.to_owned();
    for mut row in out.rows_mut() {
        let unit = l2_normalize(row.as_slice().expect("contiguous row"), NORM_EPSILON);
        row.assign(&ndarray::ArrayView1::from(&unit));
    }
    out
}

fn normalize_rows_backward(raw: ArrayView2<f64>, grad_unit: &Array2<f64>) -> Array2<f64> {
    let raw = raw.as_standard_layout();
    let mut out = Array2::zeros(raw.dim());
    for ((mut o, r), g) in out.rows_mut().into_iter().zip(raw.rows()).zip(grad_unit.rows()) {
        let r = r.to_vec();
        let g = g.to_vec();
        let back = l2_normalize_backward(&r, &g, NORM_EPSILON);
        o.assign(&ndarray::ArrayView1::from(&back));
    }
    out
}

impl MarginHead {
    pub fn new(config: MarginHeadConfig, embedding_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.01).expect("positive std");
        let weight = Array2::from_shape_fn((config.num_classes, embedding_dim), |_| {
            normal.sample(&mut rng)
        });
        Ok(Self { config, weight })
    }

    pub fn embedding_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn check_labels(&self, labels: &[usize]) -> Result<()> {
        let len = self.config.num_classes;
        match labels.iter().find(|&&y| y >= len) {
            Some(&index) => Err(Error::Index { index, len }),
            None => Ok(()),
        }
    }

    /// `s * cos(theta_j + m * [j == label])` for every class `j`.
    pub fn logits(&self, embeddings: ArrayView2<f64>, labels: &[usize]) -> Result<MarginLogits> {
        self.check_labels(labels)?;
        if embeddings.nrows() != labels.len() || embeddings.ncols() != self.embedding_dim() {
            return Err(Error::InputShape {
                expected: vec![labels.len(), self.embedding_dim()],
                actual: embeddings.shape().to_vec(),
            });
        }
        if embeddings.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("embeddings contain non-finite values"));
        }
        let unit_embeddings = normalize_rows(embeddings);
        let unit_weights = normalize_rows(self.weight.view());
        let cosines = unit_embeddings.dot(&unit_weights.t());
        let MarginHeadConfig { scale, margin, .. } = self.config;
        let (cos_m, sin_m) = (margin.cos(), margin.sin());
        let mut logits = &cosines * scale;
        for (i, &y) in labels.iter().enumerate() {
            let c = cosines[[i, y]].clamp(-1.0, 1.0);
            let sin = (1.0 - c * c).max(0.0).sqrt();
            logits[[i, y]] = scale * (c * cos_m - sin * sin_m);
        }
        Ok(MarginLogits {
            logits,
            cosines,
            unit_embeddings,
            unit_weights,
        })
    }

    /// Pull `dL/dlogits` back to `(dL/dembeddings, dL/dweight)`.
    pub fn backward(
        &self,
        embeddings: ArrayView2<f64>,
        forward: &MarginLogits,
        labels: &[usize],
        grad_logits: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>) {
        let MarginHeadConfig { scale, margin, .. } = self.config;
        let (cos_m, sin_m) = (margin.cos(), margin.sin());
        let mut grad_cos = grad_logits * scale;
        for (i, &y) in labels.iter().enumerate() {
            let c = forward.cosines[[i, y]].clamp(-1.0, 1.0);
            let sin = (1.0 - c * c).max(0.0).sqrt().max(SIN_GUARD);
            grad_cos[[i, y]] = scale * grad_logits[[i, y]] * (cos_m + sin_m * c / sin);
        }
        let grad_unit_emb = grad_cos.dot(&forward.unit_weights);
        let grad_unit_w = grad_cos.t().dot(&forward.unit_embeddings);
        (
            normalize_rows_backward(embeddings, &grad_unit_emb),
            normalize_rows_backward(self.weight.view(), &grad_unit_w),
        )
    }
}

/// Free-function form of [`MarginHead::logits`].
pub fn margin_logits(head: &MarginHead, embeddings: ArrayView2<f64>, labels: &[usize]) -> Result<Array2<f64>> {
    head.logits(embeddings, labels).map(|l| l.logits)
}
