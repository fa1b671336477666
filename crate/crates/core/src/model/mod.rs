//! Embedding model: a multi-stage convolutional feature extractor, immutable
//! snapshots with content hashes, the margin-softmax head used for supervised
//! training, and the on-disk checkpoint format.

mod backbone;
mod checkpoint;
mod features;
mod head;
mod snapshot;
mod spec;

pub use backbone::{Backbone, ConvStage, ForwardCache};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointManifest,
    TensorEntry, CHECKPOINT_MAGIC,
};
pub use features::{BatchFeatures, FeatureStack};
pub use head::{margin_logits, MarginHead, MarginHeadConfig, MarginLogits};
pub use snapshot::ModelSnapshot;
pub use spec::BackboneSpec;
