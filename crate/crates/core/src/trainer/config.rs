use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::losses::LossConfig;
use crate::model::BackboneSpec;
use crate::nn::SgdConfig;
use crate::{Error, Result};

/// Learning-rate schedule over 1-based epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Multiply by `factor` once for every milestone strictly before the epoch.
    Step { milestones: Vec<usize>, factor: f64 },
    /// `lr * gamma^(epoch - 1)`.
    Exponential { gamma: f64 },
}

impl LrSchedule {
    pub fn lr(&self, base: f64, epoch: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Step { milestones, factor } => {
                let drops = milestones.iter().filter(|&&m| m < epoch).count();
                base * factor.powi(drops as i32)
            }
            LrSchedule::Exponential { gamma } => base * gamma.powi(epoch as i32 - 1),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LrSchedule::Constant => Ok(()),
            LrSchedule::Step { factor, .. } if *factor > 0.0 => Ok(()),
            LrSchedule::Exponential { gamma } if *gamma > 0.0 => Ok(()),
            _ => Err(Error::config("learning-rate decay factors must be positive")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Distillation-only incremental steps from a frozen teacher.
    Clface,
    /// Margin-loss updates of the previous model on each step's data.
    Finetune,
    /// One margin-loss run on the union of all step data.
    Joint,
    /// The base model is never updated again.
    FeatureExtract,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Clface => "clface",
            Mode::Finetune => "finetune",
            Mode::Joint => "joint",
            Mode::FeatureExtract => "feature_extract",
        }
    }

    /// Checkpoints a run over `step_count` incremental steps produces.
    pub fn checkpoint_count(&self, step_count: usize) -> usize {
        match self {
            Mode::Joint => 1,
            _ => step_count + 1,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "clface" => Ok(Mode::Clface),
            "finetune" => Ok(Mode::Finetune),
            "joint" => Ok(Mode::Joint),
            "feature_extract" => Ok(Mode::FeatureExtract),
            other => Err(Error::config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub base_epochs: usize,
    pub incr_epochs: usize,
    pub batch_size: usize,
    pub lr_base: f64,
    pub lr_incr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub base_schedule: LrSchedule,
    pub incr_schedule: LrSchedule,
    pub grad_clip: Option<f64>,
    /// Margin-softmax scale `s`.
    pub margin_scale: f64,
    /// Additive angular margin `m`.
    pub margin: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            base_epochs: 20,
            incr_epochs: 10,
            // Large-scale runs use 256; see `TrainConfig::large_scale`.
            batch_size: 32,
            lr_base: 0.1,
            lr_incr: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            base_schedule: LrSchedule::Step {
                milestones: vec![6, 12],
                factor: 0.1,
            },
            incr_schedule: LrSchedule::Exponential { gamma: 0.9 },
            grad_clip: None,
            margin_scale: 64.0,
            margin: 0.5,
            seed: 0,
            mode: Mode::Clface,
        }
    }
}

impl TrainConfig {
    pub fn large_scale() -> Self {
        Self {
            batch_size: 256,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_epochs == 0 || self.incr_epochs == 0 {
            return Err(Error::config("epoch counts must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        for (name, v) in [("lr_base", self.lr_base), ("lr_incr", self.lr_incr)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return Err(Error::config("momentum must be in [0, 1) and weight decay non-negative"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::config("grad_clip must be positive when set"));
            }
        }
        self.base_schedule.validate()?;
        self.incr_schedule.validate()
    }

    pub fn sgd(&self) -> SgdConfig {
        SgdConfig {
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            grad_clip: self.grad_clip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub channels: Vec<usize>,
    pub embedding_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: vec![16, 32, 64, 128],
            embedding_dim: 128,
        }
    }
}

impl ModelConfig {
    pub fn backbone_spec(&self, input_shape: (usize, usize, usize)) -> Result<BackboneSpec> {
        BackboneSpec::new(input_shape, self.channels.clone(), self.embedding_dim)
    }
}

/// Everything that determines a training run besides the data and the plan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.train.validate()
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
