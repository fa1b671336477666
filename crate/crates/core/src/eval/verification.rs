use serde::{Deserialize, Serialize};

use super::SimilarityRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldVerification {
    pub va_mean: f64,
    /// Population standard deviation of the fold accuracies.
    pub va_std: f64,
    pub fold_accuracies: Vec<f64>,
    /// Threshold applied to each held-out fold.
    pub thresholds: Vec<f64>,
}

/// `[start, end)` of each of `k` contiguous folds; the first `n % k` folds are
/// one record longer.
pub fn fold_bounds(n: usize, k: usize) -> Vec<(usize, usize)> {
    let (size, extra) = (n / k, n % k);
    let mut start = 0;
    (0..k)
        .map(|f| {
            let len = size + usize::from(f < extra);
            let bounds = (start, start + len);
            start += len;
            bounds
        })
        .collect()
}

/// Threshold maximizing accuracy (`genuine iff score > threshold`) over
/// `records`. Candidates are `-inf`, the midpoints of adjacent distinct
/// scores, and `+inf`; ties go to the smallest threshold.
pub fn best_threshold(records: &[SimilarityRecord]) -> f64 {
    let mut sorted: Vec<&SimilarityRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut correct = records.iter().filter(|r| r.is_genuine).count() as i64;
    let mut best = (correct, f64::NEG_INFINITY);
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i].score;
        while i < sorted.len() && sorted[i].score == value {
            correct += if sorted[i].is_genuine { -1 } else { 1 };
            i += 1;
        }
        let threshold = if i < sorted.len() {
            (value + sorted[i].score) / 2.0
        } else {
            f64::INFINITY
        };
        if correct > best.0 {
            best = (correct, threshold);
        }
    }
    best.1
}

fn accuracy(records: &[SimilarityRecord], threshold: f64) -> f64 {
    let correct = records
        .iter()
        .filter(|r| (r.score > threshold) == r.is_genuine)
        .count();
    correct as f64 / records.len() as f64
}

/// k-fold cross-validated verification accuracy over contiguous folds of the
/// given record order: each fold is scored at the threshold fitted on the
/// other `k - 1` folds.
pub fn verification_accuracy_kfold(records: &[SimilarityRecord], k: usize) -> Result<KFoldVerification> {
    if k < 2 {
        return Err(Error::config(format!("k-fold verification needs k >= 2, got {k}")));
    }
    if records.len() < k {
        return Err(Error::config(format!("{} records cannot fill {k} folds", records.len())));
    }
    if records.iter().any(|r| !r.score.is_finite()) {
        return Err(Error::validation("similarity scores must be finite"));
    }
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut thresholds = Vec::with_capacity(k);
    for (start, end) in fold_bounds(records.len(), k) {
        let train: Vec<SimilarityRecord> = records[..start].iter().chain(&records[end..]).copied().collect();
        let threshold = best_threshold(&train);
        fold_accuracies.push(accuracy(&records[start..end], threshold));
        thresholds.push(threshold);
    }
    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    let var = fold_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k as f64;
    Ok(KFoldVerification {
        va_mean: mean,
        va_std: var.sqrt(),
        fold_accuracies,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(score: f64, is_genuine: bool) -> SimilarityRecord {
        SimilarityRecord { score, is_genuine }
    }

    #[test]
    fn separable_scores_are_perfect() {
        let records: Vec<_> = (0..40)
            .map(|i| if i % 2 == 0 { rec(0.5 + i as f64 * 0.01, true) } else { rec(-0.5 - i as f64 * 0.01, false) })
            .collect();
        let out = verification_accuracy_kfold(&records, 10).unwrap();
        assert_eq!(out.va_mean, 1.0);
        assert_eq!(out.va_std, 0.0);
    }

    #[test]
    fn sentinel_thresholds() {
        assert_eq!(best_threshold(&[rec(0.1, true), rec(0.2, true)]), f64::NEG_INFINITY);
        assert_eq!(best_threshold(&[rec(0.1, false), rec(0.2, false)]), f64::INFINITY);
        assert_eq!(best_threshold(&[rec(0.1, false), rec(0.3, true)]), 0.2);
    }

    #[test]
    fn fold_sizes() {
        assert_eq!(fold_bounds(23, 10)[..4], [(0, 3), (3, 6), (6, 9), (9, 11)]);
        assert_eq!(fold_bounds(23, 10).last(), Some(&(21, 23)));
    }

    #[test]
    fn configuration_errors() {
        let r = vec![rec(0.1, true); 5];
        assert!(matches!(verification_accuracy_kfold(&r, 1), Err(Error::Config(_))));
        assert!(matches!(verification_accuracy_kfold(&r, 6), Err(Error::Config(_))));
    }
}
