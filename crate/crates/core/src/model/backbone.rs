use ndarray::{Array1, Array2, Array4, ArrayView4, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{BackboneSpec, BatchFeatures};
use crate::nn::{avg_pool_2x2, avg_pool_2x2_backward, col2im_3x3, im2col_3x3, KERNEL_AREA};
use crate::{Error, Result};

/// One 3x3 convolution; `weight` is `(C_out, C_in * 9)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStage {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Parameters of the feature extractor. The same type carries gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    pub spec: BackboneSpec,
    pub stages: Vec<ConvStage>,
    /// `(d, C_L)` projection applied after global average pooling.
    pub embed_weight: Array2<f64>,
    pub embed_bias: Array1<f64>,
}

/// Intermediates kept by [`Backbone::forward_train`] for the backward pass.
#[derive(Debug)]
pub struct ForwardCache {
    batch: usize,
    cols: Vec<Array2<f64>>,
    /// ReLU mask per stage, `(C_out, B * H * W)` in conv resolution.
    active: Vec<Vec<bool>>,
    pooled: Array2<f64>,
}

fn standard(m: Array2<f64>) -> Array2<f64> {
    if m.is_standard_layout() {
        m
    } else {
        m.as_standard_layout().into_owned()
    }
}

impl Backbone {
    pub fn zeros(spec: &BackboneSpec) -> Self {
        let stages = (0..spec.stage_count)
            .map(|l| ConvStage {
                weight: Array2::zeros((
                    spec.channels_per_stage[l],
                    spec.stage_in_channels(l) * KERNEL_AREA,
                )),
                bias: Array1::zeros(spec.channels_per_stage[l]),
            })
            .collect();
        let last = *spec.channels_per_stage.last().expect("validated spec");
        Self {
            spec: spec.clone(),
            stages,
            embed_weight: Array2::zeros((spec.embedding_dim, last)),
            embed_bias: Array1::zeros(spec.embedding_dim),
        }
    }

    /// He-normal conv weights, `N(0, 1/fan_in)` projection, zero biases.
    pub fn init(spec: &BackboneSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::zeros(spec);
        for stage in &mut model.stages {
            let fan_in = stage.weight.ncols() as f64;
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
            stage.weight.mapv_inplace(|_| normal.sample(&mut rng));
        }
        let fan_in = model.embed_weight.ncols() as f64;
        let normal = Normal::new(0.0, (1.0 / fan_in).sqrt()).expect("positive std");
        model.embed_weight.mapv_inplace(|_| normal.sample(&mut rng));
        model
    }

    fn check_input(&self, batch: &ArrayView4<f64>) -> Result<()> {
        let (c, h, w) = self.spec.input_shape;
        let (b, bc, bh, bw) = batch.dim();
        if b == 0 || (bc, bh, bw) != (c, h, w) {
            return Err(Error::InputShape {
                expected: vec![b.max(1), c, h, w],
                actual: vec![b, bc, bh, bw],
            });
        }
        if batch.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("input batch contains non-finite values"));
        }
        Ok(())
    }

    /// Batch forward pass; `batch` is `(B, C_in, H_in, W_in)`.
    pub fn forward(&self, batch: ArrayView4<f64>) -> Result<BatchFeatures> {
        self.forward_train(batch).map(|(features, _)| features)
    }

    pub fn forward_train(&self, batch: ArrayView4<f64>) -> Result<(BatchFeatures, ForwardCache)> {
        self.check_input(&batch)?;
        let b = batch.dim().0;
        let mut x = batch.permuted_axes([1, 0, 2, 3]).as_standard_layout().into_owned();
        let mut stage_maps = Vec::with_capacity(self.stages.len());
        let mut cols_cache = Vec::with_capacity(self.stages.len());
        let mut active_cache = Vec::with_capacity(self.stages.len());
        for (l, stage) in self.stages.iter().enumerate() {
            let (h, w) = self.spec.stage_conv_dims(l);
            let cols = im2col_3x3(x.view());
            let mut z = stage.weight.dot(&cols);
            z += &stage.bias.view().insert_axis(Axis(1));
            let active: Vec<bool> = z.iter().map(|v| *v > 0.0).collect();
            z.mapv_inplace(|v| v.max(0.0));
            let cout = stage.weight.nrows();
            let relu = z.into_shape_with_order((cout, b, h, w)).expect("conv output shape");
            x = avg_pool_2x2(relu.view());
            stage_maps.push(x.view().permuted_axes([1, 0, 2, 3]).as_standard_layout().into_owned());
            cols_cache.push(cols);
            active_cache.push(active);
        }
        let (c_last, _, hl, wl) = x.dim();
        let pooled = x
            .into_shape_with_order((c_last, b, hl * wl))
            .expect("final map shape")
            .mean_axis(Axis(2))
            .expect("non-empty spatial extent");
        let mut emb = self.embed_weight.dot(&pooled);
        emb += &self.embed_bias.view().insert_axis(Axis(1));
        let features = BatchFeatures {
            stage_maps,
            embeddings: emb.reversed_axes().as_standard_layout().into_owned(),
        };
        let cache = ForwardCache {
            batch: b,
            cols: cols_cache,
            active: active_cache,
            pooled,
        };
        Ok((features, cache))
    }

    /// Gradients of a scalar objective w.r.t. every parameter, given its
    /// gradients w.r.t. the stage maps (`(B, C_l, H_l, W_l)`, `None` for stages
    /// the objective ignores) and the embeddings (`(B, d)`).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_stage_maps: &[Option<Array4<f64>>],
        grad_embeddings: Option<&Array2<f64>>,
    ) -> Backbone {
        assert_eq!(grad_stage_maps.len(), self.stages.len());
        let b = cache.batch;
        let mut grads = Backbone::zeros(&self.spec);
        let last = self.stages.len() - 1;
        let (hl, wl) = self.spec.spatial_dims_per_stage[last];
        let c_last = self.spec.channels_per_stage[last];

        let mut grad_map = Array4::<f64>::zeros((c_last, b, hl, wl));
        if let Some(ge) = grad_embeddings {
            let ge_t = ge.t();
            grads.embed_weight = standard(ge_t.dot(&cache.pooled.t()));
            grads.embed_bias = ge_t.sum_axis(Axis(1));
            let grad_pooled = self.embed_weight.t().dot(&ge_t) / (hl * wl) as f64;
            grad_map += &grad_pooled.insert_axis(Axis(2)).insert_axis(Axis(3));
        }

        for l in (0..self.stages.len()).rev() {
            if let Some(g) = &grad_stage_maps[l] {
                grad_map += &g.view().permuted_axes([1, 0, 2, 3]);
            }
            let (h, w) = self.spec.stage_conv_dims(l);
            let cout = self.spec.channels_per_stage[l];
            let mut dz = avg_pool_2x2_backward(grad_map.view(), (h, w))
                .into_shape_with_order((cout, b * h * w))
                .expect("conv grad shape");
            dz.iter_mut()
                .zip(&cache.active[l])
                .for_each(|(g, on)| if !on { *g = 0.0 });
            grads.stages[l].weight = standard(dz.dot(&cache.cols[l].t()));
            grads.stages[l].bias = dz.sum_axis(Axis(1));
            if l > 0 {
                let dcols = self.stages[l].weight.t().dot(&dz);
                let cin = self.spec.stage_in_channels(l);
                grad_map = col2im_3x3(&dcols, (cin, b, h, w));
            }
        }
        grads
    }

    /// Named tensors in a fixed canonical order: `(name, shape, values)`.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::with_capacity(2 * self.stages.len() + 2);
        for (l, stage) in self.stages.iter().enumerate() {
            out.push((
                format!("stage{}.conv.weight", l + 1),
                stage.weight.shape().to_vec(),
                stage.weight.as_slice().expect("standard layout"),
            ));
            out.push((
                format!("stage{}.conv.bias", l + 1),
                stage.bias.shape().to_vec(),
                stage.bias.as_slice().expect("standard layout"),
            ));
        }
        out.push((
            "embed.weight".into(),
            self.embed_weight.shape().to_vec(),
            self.embed_weight.as_slice().expect("standard layout"),
        ));
        out.push((
            "embed.bias".into(),
            self.embed_bias.shape().to_vec(),
            self.embed_bias.as_slice().expect("standard layout"),
        ));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.stages.len() + 2);
        for stage in &mut self.stages {
            out.push(stage.weight.as_slice_mut().expect("standard layout"));
            out.push(stage.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.embed_weight.as_slice_mut().expect("standard layout"));
        out.push(self.embed_bias.as_slice_mut().expect("standard layout"));
        out
    }

    /// Rebuild from tensors listed in [`Backbone::named_tensors`] order.
    pub fn from_tensors(spec: &BackboneSpec, tensors: &[(String, Vec<usize>, Vec<f64>)]) -> Result<Self> {
        spec.validate()?;
        let mut model = Self::zeros(spec);
        let expected: Vec<(String, Vec<usize>)> = model
            .named_tensors()
            .into_iter()
            .map(|(n, s, _)| (n, s))
            .collect();
        if expected.len() != tensors.len() {
            return Err(Error::validation(format!(
                "expected {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, shape), (got_name, got_shape, _)) in expected.iter().zip(tensors) {
            if name != got_name || shape != got_shape {
                return Err(Error::validation(format!(
                    "tensor {got_name} {got_shape:?} does not match expected {name} {shape:?}"
                )));
            }
        }
        for (dst, (_, _, values)) in model.tensors_mut().into_iter().zip(tensors) {
            dst.copy_from_slice(values);
        }
        Ok(model)
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, _, v)| v.len()).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.named_tensors()
            .iter()
            .flat_map(|(_, _, v)| v.iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.parameter_count());
        let mut offset = 0;
        for dst in self.tensors_mut() {
            let n = dst.len();
            dst.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
    }
}
