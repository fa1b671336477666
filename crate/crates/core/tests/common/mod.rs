//! Scalar reference implementations and fixtures shared by the integration
//! tests. Nothing here calls into the library's loss or metric code.
#![allow(dead_code)]

pub mod criteria;
pub mod toy;

use lifelong_core::eval::SimilarityRecord;
use lifelong_core::model::BatchFeatures;
use ndarray::{Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| uniform(rng))
}

/// Random stage maps with halving spatial size, plus random embeddings.
pub fn features(rng: &mut ChaCha8Rng, n: usize, stages: &[(usize, usize, usize)], d: usize) -> BatchFeatures {
    let stage_maps = stages
        .iter()
        .map(|&(c, h, w)| Array4::from_shape_fn((n, c, h, w), |_| uniform(rng)))
        .collect();
    BatchFeatures {
        stage_maps,
        embeddings: matrix(rng, n, d),
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let mut norm = 0.0;
    for x in v {
        norm += x * x;
    }
    let norm = norm.sqrt();
    if norm < 1e-12 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| x / norm).collect()
}

fn row(m: &Array2<f64>, i: usize) -> Vec<f64> {
    (0..m.ncols()).map(|j| m[[i, j]]).collect()
}

pub fn msfd_oracle(s: &BatchFeatures, t: &BatchFeatures) -> f64 {
    let n = s.stage_maps[0].shape()[0];
    let l = s.stage_maps.len();
    let mut total = 0.0;
    for stage in 1..l {
        let (sm, tm) = (&s.stage_maps[stage], &t.stage_maps[stage]);
        let (c, h, w) = (sm.shape()[1], sm.shape()[2], sm.shape()[3]);
        for i in 0..n {
            let mut ps = vec![0.0; h * w];
            let mut pt = vec![0.0; h * w];
            for y in 0..h {
                for x in 0..w {
                    for ch in 0..c {
                        ps[y * w + x] += sm[[i, ch, y, x]] / c as f64;
                        pt[y * w + x] += tm[[i, ch, y, x]] / c as f64;
                    }
                }
            }
            let (us, ut) = (unit(&ps), unit(&pt));
            for k in 0..h * w {
                total += (us[k] - ut[k]).powi(2);
            }
        }
    }
    total / (n * (l - 1)) as f64
}

pub fn gpkd_oracle(s: &Array2<f64>, t: &Array2<f64>) -> f64 {
    let n = s.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (unit(&row(s, i)), unit(&row(t, i)));
        let mut cos = 0.0;
        for k in 0..a.len() {
            cos += a[k] * b[k];
        }
        total += 1.0 - cos;
    }
    total / n as f64
}

pub fn ckd_oracle(s: &Array2<f64>, t: &Array2<f64>, tau: f64) -> f64 {
    let b = s.nrows();
    let us: Vec<Vec<f64>> = (0..b).map(|i| unit(&row(s, i))).collect();
    let ut: Vec<Vec<f64>> = (0..b).map(|i| unit(&row(t, i))).collect();
    let sim = |i: usize, k: usize| -> f64 { us[i].iter().zip(&ut[k]).map(|(x, y)| x * y).sum::<f64>() / tau };
    let mut total = 0.0;
    for i in 0..b {
        let mut denom = 0.0;
        for k in 0..b {
            denom += sim(i, k).exp();
        }
        total += (sim(i, i).exp() / denom).ln();
    }
    -total / b as f64
}

pub fn cross_entropy_oracle(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let mut z = 0.0;
        for j in 0..logits.ncols() {
            z += logits[[i, j]].exp();
        }
        total -= (logits[[i, y]].exp() / z).ln();
    }
    total / labels.len() as f64
}

/// `s * cos(theta + m)` on the target class via the angle itself.
pub fn margin_logits_oracle(emb: &Array2<f64>, weight: &Array2<f64>, labels: &[usize], s: f64, m: f64) -> Array2<f64> {
    let mut out = Array2::zeros((emb.nrows(), weight.nrows()));
    for i in 0..emb.nrows() {
        let e = unit(&row(emb, i));
        for j in 0..weight.nrows() {
            let w = unit(&row(weight, j));
            let cos: f64 = e.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
            out[[i, j]] = if j == labels[i] { s * (cos.acos() + m).cos() } else { s * cos };
        }
    }
    out
}

fn count_correct(records: &[SimilarityRecord], threshold: f64) -> usize {
    records.iter().filter(|r| (r.score > threshold) == r.is_genuine).count()
}

/// Tries -inf, +inf and every midpoint of two distinct scores; keeps the
/// first (smallest) threshold with the most correct decisions.
pub fn exhaustive_threshold(records: &[SimilarityRecord]) -> f64 {
    let mut scores: Vec<f64> = records.iter().map(|r| r.score).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scores.dedup();
    let mut candidates = vec![f64::NEG_INFINITY];
    for w in scores.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }
    candidates.push(f64::INFINITY);
    let mut best = (0, f64::NAN);
    for &t in &candidates {
        let c = count_correct(records, t);
        if best.1.is_nan() || c > best.0 {
            best = (c, t);
        }
    }
    best.1
}

/// Per-fold accuracies of contiguous k-fold verification.
pub fn kfold_oracle(records: &[SimilarityRecord], k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = records.len();
    let mut accs = Vec::new();
    let mut thresholds = Vec::new();
    let mut start = 0;
    for f in 0..k {
        let len = n / k + usize::from(f < n % k);
        let end = start + len;
        let train: Vec<SimilarityRecord> = records
            .iter()
            .enumerate()
            .filter(|(i, _)| *i < start || *i >= end)
            .map(|(_, r)| *r)
            .collect();
        let t = exhaustive_threshold(&train);
        accs.push(count_correct(&records[start..end], t) as f64 / len as f64);
        thresholds.push(t);
        start = end;
    }
    (accs, thresholds)
}

pub fn random_records(rng: &mut ChaCha8Rng, n: usize) -> Vec<SimilarityRecord> {
    let separation = rng.random_range(0.0..1.0);
    // Coarse grid produces ties.
    let grid = rng.random_bool(0.5);
    (0..n)
        .map(|_| {
            let is_genuine = rng.random_bool(0.5);
            let mut score = uniform(rng) + if is_genuine { separation } else { 0.0 };
            if grid {
                score = (score * 8.0).round() / 8.0;
            }
            SimilarityRecord { score, is_genuine }
        })
        .collect()
}
