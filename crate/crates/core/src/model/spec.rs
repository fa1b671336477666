use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Architecture descriptor: `stage_count` blocks of 3x3 conv, ReLU and 2x2
/// average pooling, followed by global average pooling and a linear embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneSpec {
    /// `(channels, height, width)` of one input image.
    pub input_shape: (usize, usize, usize),
    pub stage_count: usize,
    pub channels_per_stage: Vec<usize>,
    /// Output `(H_l, W_l)` of each stage, after downsampling.
    pub spatial_dims_per_stage: Vec<(usize, usize)>,
    pub embedding_dim: usize,
}

impl BackboneSpec {
    /// Derive the per-stage spatial dims from the input resolution.
    pub fn new(
        input_shape: (usize, usize, usize),
        channels_per_stage: Vec<usize>,
        embedding_dim: usize,
    ) -> Result<Self> {
        let (_, mut h, mut w) = input_shape;
        let mut dims = Vec::with_capacity(channels_per_stage.len());
        for _ in &channels_per_stage {
            if h % 2 != 0 || w % 2 != 0 {
                return Err(Error::config(format!(
                    "input {input_shape:?} cannot be halved {} times",
                    channels_per_stage.len()
                )));
            }
            h /= 2;
            w /= 2;
            dims.push((h, w));
        }
        let spec = Self {
            input_shape,
            stage_count: channels_per_stage.len(),
            channels_per_stage,
            spatial_dims_per_stage: dims,
            embedding_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (c, h, w) = self.input_shape;
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::config("input shape must be positive"));
        }
        if self.stage_count < 2 {
            return Err(Error::config("at least two stages are required"));
        }
        if self.channels_per_stage.len() != self.stage_count
            || self.spatial_dims_per_stage.len() != self.stage_count
        {
            return Err(Error::config(
                "stage_count must equal the number of channel and spatial entries",
            ));
        }
        if self.embedding_dim == 0 || self.channels_per_stage.contains(&0) {
            return Err(Error::config("channels and embedding_dim must be positive"));
        }
        let (mut eh, mut ew) = (h, w);
        for (l, &(sh, sw)) in self.spatial_dims_per_stage.iter().enumerate() {
            if eh % 2 != 0 || ew % 2 != 0 {
                return Err(Error::config(format!("stage {} input is not even", l + 1)));
            }
            eh /= 2;
            ew /= 2;
            if (sh, sw) != (eh, ew) || sh == 0 || sw == 0 {
                return Err(Error::config(format!(
                    "stage {} spatial dims {:?} do not match the 2x downsampling chain {:?}",
                    l + 1,
                    (sh, sw),
                    (eh, ew)
                )));
            }
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        let (c, h, w) = self.input_shape;
        c * h * w
    }

    /// Input channels of stage `l` (0-based).
    pub fn stage_in_channels(&self, l: usize) -> usize {
        if l == 0 {
            self.input_shape.0
        } else {
            self.channels_per_stage[l - 1]
        }
    }

    /// Spatial size at which stage `l` convolves (before its pooling).
    pub fn stage_conv_dims(&self, l: usize) -> (usize, usize) {
        let (h, w) = self.spatial_dims_per_stage[l];
        (2 * h, 2 * w)
    }
}

impl Default for BackboneSpec {
    fn default() -> Self {
        Self::new((3, 32, 32), vec![16, 32, 64, 128], 128).expect("default spec is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_four_stages() {
        let spec = BackboneSpec::default();
        assert_eq!(spec.stage_count, 4);
        assert_eq!(spec.spatial_dims_per_stage, vec![(16, 16), (8, 8), (4, 4), (2, 2)]);
    }

    #[test]
    fn rejects_single_stage() {
        assert!(BackboneSpec::new((1, 8, 8), vec![4], 8).is_err());
    }

    #[test]
    fn rejects_odd_resolution() {
        assert!(BackboneSpec::new((1, 12, 12), vec![2, 2, 2], 8).is_err());
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let mut spec = BackboneSpec::default();
        spec.channels_per_stage.pop();
        assert!(spec.validate().is_err());
    }
}
