use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub momentum: f64,
    pub weight_decay: f64,
    /// Clip the global gradient L2 norm to this value when set.
    pub grad_clip: Option<f64>,
}

/// Heavy-ball SGD with coupled L2 weight decay:
/// `v <- mu * v + (g + wd * p)`, `p <- p - lr * v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    config: SgdConfig,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(config: SgdConfig) -> Self {
        Self {
            config,
            velocity: Vec::new(),
        }
    }

    /// Apply one update. `params` and `grads` must list tensors in the same
    /// order on every call.
    pub fn step(&mut self, lr: f64, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), grads.len());
        if self.velocity.is_empty() {
            self.velocity = grads.iter().map(|g| vec![0.0; g.len()]).collect();
        }
        let scale = match self.config.grad_clip {
            Some(max_norm) => {
                let norm = grads
                    .iter()
                    .flat_map(|g| g.iter())
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt();
                if norm > max_norm {
                    max_norm / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let SgdConfig {
            momentum,
            weight_decay,
            ..
        } = self.config;
        for ((p, g), v) in params.iter_mut().zip(grads).zip(self.velocity.iter_mut()) {
            for ((pi, gi), vi) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                let d = scale * gi + weight_decay * *pi;
                *vi = momentum * *vi + d;
                *pi -= lr * *vi;
            }
        }
    }
}
