use serde::{Deserialize, Serialize};

use crate::nn::NORM_EPSILON;
use crate::{Error, Result};

/// Weights of the incremental objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Multiscale feature-map distillation weight.
    pub lambda1: f64,
    /// Embedding-orientation distillation weight.
    pub lambda2: f64,
    /// Contrastive distillation weight.
    pub lambda3: f64,
    /// Contrastive temperature.
    pub tau: f64,
    /// Add a margin cross-entropy term on a per-step head during incremental
    /// steps (identity-supervision ablation).
    pub include_id_loss: bool,
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda1: 3.0,
            lambda2: 12.0,
            lambda3: 1.0,
            tau: 2.0,
            include_id_loss: false,
            epsilon: NORM_EPSILON,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("lambda3", self.lambda3)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be a finite non-negative weight")));
            }
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::config("tau must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        Ok(())
    }

    /// All weighted terms are zero and no identity loss is trained.
    pub fn is_null(&self) -> bool {
        self.lambda1 == 0.0 && self.lambda2 == 0.0 && self.lambda3 == 0.0 && !self.include_id_loss
    }

    pub fn masked(mut self, mask: LossMask) -> Self {
        if !mask.msfd {
            self.lambda1 = 0.0;
        }
        if !mask.gpkd {
            self.lambda2 = 0.0;
        }
        if !mask.ckd {
            self.lambda3 = 0.0;
        }
        self
    }
}

/// Which distillation terms are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LossMask {
    pub msfd: bool,
    pub gpkd: bool,
    pub ckd: bool,
}

impl LossMask {
    pub const ALL: LossMask = LossMask {
        msfd: true,
        gpkd: true,
        ckd: true,
    };

    /// Parse `"all"`, `"none"` or a `+`-joined subset such as `"msfd+gpkd"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim().to_ascii_lowercase();
        match spec.as_str() {
            "all" => return Ok(Self::ALL),
            "none" => {
                return Ok(LossMask {
                    msfd: false,
                    gpkd: false,
                    ckd: false,
                })
            }
            _ => {}
        }
        let mut mask = LossMask {
            msfd: false,
            gpkd: false,
            ckd: false,
        };
        for part in spec.split('+') {
            let slot = match part.trim() {
                "msfd" => &mut mask.msfd,
                "gpkd" => &mut mask.gpkd,
                "ckd" => &mut mask.ckd,
                other => return Err(Error::config(format!("unknown loss term {other:?}"))),
            };
            if *slot {
                return Err(Error::config(format!("loss term {part:?} listed twice")));
            }
            *slot = true;
        }
        Ok(mask)
    }

    pub fn label(&self) -> String {
        let parts: Vec<&str> = [("msfd", self.msfd), ("gpkd", self.gpkd), ("ckd", self.ckd)]
            .into_iter()
            .filter(|(_, on)| *on)
            .map(|(n, _)| n)
            .collect();
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

/// Per-component loss values of one evaluation of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub msfd: f64,
    pub gpkd: f64,
    pub ckd: f64,
    pub id: Option<f64>,
    pub total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.msfd.is_finite()
            && self.gpkd.is_finite()
            && self.ckd.is_finite()
            && self.id.is_none_or(f64::is_finite)
            && self.total.is_finite()
    }

    /// Component-wise mean; `total` is the mean of totals.
    pub fn mean(items: &[LossBreakdown]) -> Option<LossBreakdown> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let sum = |f: fn(&LossBreakdown) -> f64| items.iter().map(f).sum::<f64>() / n;
        let id = if items.iter().all(|b| b.id.is_some()) {
            Some(items.iter().map(|b| b.id.unwrap_or(0.0)).sum::<f64>() / n)
        } else {
            None
        };
        Some(LossBreakdown {
            msfd: sum(|b| b.msfd),
            gpkd: sum(|b| b.gpkd),
            ckd: sum(|b| b.ckd),
            id,
            total: sum(|b| b.total),
        })
    }
}

/// `lambda1 * msfd + lambda2 * gpkd + lambda3 * ckd`, plus `id` when the
/// configuration enables identity supervision.
pub fn total_loss(msfd: f64, gpkd: f64, ckd: f64, id: Option<f64>, config: &LossConfig) -> LossBreakdown {
    let id = if config.include_id_loss { id } else { None };
    let total = config.lambda1 * msfd + config.lambda2 * gpkd + config.lambda3 * ckd + id.unwrap_or(0.0);
    LossBreakdown {
        msfd,
        gpkd,
        ckd,
        id,
        total,
    }
}
