use ndarray::ArrayView4;
use sha2::{Digest, Sha256};

use super::{Backbone, BackboneSpec, BatchFeatures};
use crate::{Error, Result};

/// Parameters of a model `M_t` together with its position in the lifelong
/// chain. A frozen snapshot only hands out shared references to its
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot {
    backbone: Backbone,
    step_index: usize,
    frozen: bool,
    parent_hash: Option<String>,
}

impl ModelSnapshot {
    pub fn new(backbone: Backbone, step_index: usize) -> Self {
        Self {
            backbone,
            step_index,
            frozen: false,
            parent_hash: None,
        }
    }

    pub(crate) fn from_parts(
        backbone: Backbone,
        step_index: usize,
        frozen: bool,
        parent_hash: Option<String>,
    ) -> Self {
        Self {
            backbone,
            step_index,
            frozen,
            parent_hash,
        }
    }

    pub fn spec(&self) -> &BackboneSpec {
        &self.backbone.spec
    }

    pub fn backbone(&self) -> &Backbone {
        &self.backbone
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Content hash of the teacher this snapshot was cloned from.
    pub fn parent_hash(&self) -> Option<&str> {
        self.parent_hash.as_deref()
    }

    pub fn freeze(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn parameters_mut(&mut self) -> Result<&mut Backbone> {
        if self.frozen {
            return Err(Error::Contract(format!(
                "snapshot for step {} is frozen",
                self.step_index
            )));
        }
        Ok(&mut self.backbone)
    }

    pub fn parameter_names(&self) -> Vec<String> {
        self.backbone
            .named_tensors()
            .into_iter()
            .map(|(name, _, _)| name)
            .collect()
    }

    pub fn forward(&self, batch: ArrayView4<f64>) -> Result<BatchFeatures> {
        self.backbone.forward(batch)
    }

    /// SHA-256 over every tensor's name, shape and little-endian values.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (name, shape, values) in self.backbone.named_tensors() {
            hasher.update((name.len() as u64).to_le_bytes());
            hasher.update(name.as_bytes());
            hasher.update((shape.len() as u64).to_le_bytes());
            for d in &shape {
                hasher.update((*d as u64).to_le_bytes());
            }
            for v in values {
                hasher.update(v.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// Trainable copy for the next step; the teacher is left untouched.
    pub fn clone_as_student(&self) -> ModelSnapshot {
        ModelSnapshot {
            backbone: self.backbone.clone(),
            step_index: self.step_index + 1,
            frozen: false,
            parent_hash: Some(self.checksum()),
        }
    }
}
