use ndarray::{Array1, Array2, Array3, Array4, Axis};

/// Features of one sample: every stage map `(C_l, H_l, W_l)` and the final
/// embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub stage_maps: Vec<Array3<f64>>,
    pub embedding: Array1<f64>,
}

/// Features of a batch, stage maps stacked as `(B, C_l, H_l, W_l)` and
/// embeddings as `(B, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFeatures {
    pub stage_maps: Vec<Array4<f64>>,
    pub embeddings: Array2<f64>,
}

impl BatchFeatures {
    pub fn batch_size(&self) -> usize {
        self.embeddings.nrows()
    }

    pub fn stage_count(&self) -> usize {
        self.stage_maps.len()
    }

    pub fn sample(&self, i: usize) -> FeatureStack {
        FeatureStack {
            stage_maps: self
                .stage_maps
                .iter()
                .map(|m| m.index_axis(Axis(0), i).to_owned())
                .collect(),
            embedding: self.embeddings.row(i).to_owned(),
        }
    }

    pub fn samples(&self) -> Vec<FeatureStack> {
        (0..self.batch_size()).map(|i| self.sample(i)).collect()
    }

    pub fn from_samples(samples: &[FeatureStack]) -> Self {
        assert!(!samples.is_empty());
        let stage_count = samples[0].stage_maps.len();
        let stage_maps = (0..stage_count)
            .map(|l| {
                let views: Vec<_> = samples.iter().map(|s| s.stage_maps[l].view()).collect();
                ndarray::stack(Axis(0), &views).expect("uniform stage shapes")
            })
            .collect();
        let rows: Vec<_> = samples.iter().map(|s| s.embedding.view()).collect();
        Self {
            stage_maps,
            embeddings: ndarray::stack(Axis(0), &rows).expect("uniform embedding dims"),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.embeddings.iter().all(|v| v.is_finite())
            && self.stage_maps.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }
}
