//! Exemplar-free continual learning for embedding recognition models.
//!
//! A frozen teacher snapshot supervises a student initialized from it using
//! three label-free distillation objectives (multiscale feature maps,
//! embedding orientation and in-batch contrastive similarity). The crate also
//! ships the base margin-softmax training, reference baselines, a synthetic
//! identity generator and the usual biometric metrics (k-fold verification
//! accuracy, TAR@FAR, CMC).

// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod losses;
pub mod model;
pub mod nn;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
