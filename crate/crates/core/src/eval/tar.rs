use serde::{Deserialize, Serialize};

use super::SimilarityRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TarAtFar {
    pub far: f64,
    pub tar: f64,
    /// Scores strictly above this value are accepted.
    pub threshold: f64,
}

/// Empirical TAR at each target FAR, without interpolation.
///
/// With `n` impostor scores sorted descending, at most `a = floor(far * n)`
/// impostors may be accepted, so the operating threshold sits just above the
/// `(a + 1)`-th highest impostor score and TAR is the fraction of genuine
/// scores strictly above it. When `a >= n` everything is accepted.
pub fn tar_at_far(records: &[SimilarityRecord], far_targets: &[f64]) -> Result<Vec<TarAtFar>> {
    let mut impostors: Vec<f64> = records.iter().filter(|r| !r.is_genuine).map(|r| r.score).collect();
    let genuine: Vec<f64> = records.iter().filter(|r| r.is_genuine).map(|r| r.score).collect();
    if impostors.is_empty() || genuine.is_empty() {
        return Err(Error::Eval("TAR@FAR needs both genuine and impostor records".into()));
    }
    impostors.sort_by(|a, b| b.total_cmp(a));
    far_targets
        .iter()
        .map(|&far| {
            if !(0.0..=1.0).contains(&far) {
                return Err(Error::config(format!("FAR target {far} is outside [0, 1]")));
            }
            let allowed = (far * impostors.len() as f64 + 1e-9).floor() as usize;
            let threshold = if allowed >= impostors.len() {
                f64::NEG_INFINITY
            } else {
                impostors[allowed]
            };
            let accepted = genuine.iter().filter(|&&g| g > threshold).count();
            Ok(TarAtFar {
                far,
                tar: accepted as f64 / genuine.len() as f64,
                threshold,
            })
        })
        .collect()
}
