use std::collections::HashSet;

use ndarray::ArrayView2;

use super::cosine;
use crate::{Error, Result};

/// Cumulative match characteristic at each `k` in `ks`.
///
/// For every probe the gallery is ordered by cosine similarity, descending,
/// with ties kept in gallery order; a probe is a rank-`k` hit when one of the
/// first `k` entries carries its identity.
pub fn rank_k_identification(
    probes: ArrayView2<f64>,
    probe_labels: &[u32],
    gallery: ArrayView2<f64>,
    gallery_labels: &[u32],
    ks: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if probes.nrows() != probe_labels.len() || gallery.nrows() != gallery_labels.len() {
        return Err(Error::validation("embedding rows and labels differ in count"));
    }
    if probes.nrows() == 0 {
        return Err(Error::validation("at least one probe is required"));
    }
    if probes.ncols() != gallery.ncols() {
        return Err(Error::validation("probe and gallery dimensions differ"));
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0) {
        return Err(Error::config(format!("rank {k} is not valid; ranks start at 1")));
    }
    let enrolled: HashSet<u32> = gallery_labels.iter().copied().collect();
    if let Some(missing) = probe_labels.iter().find(|l| !enrolled.contains(l)) {
        return Err(Error::config(format!("probe identity {missing} is not in the gallery")));
    }
    let gallery_rows: Vec<Vec<f64>> = gallery.rows().into_iter().map(|r| r.to_vec()).collect();
    let ranks: Vec<usize> = probes
        .rows()
        .into_iter()
        .zip(probe_labels)
        .map(|(probe, label)| {
            let probe = probe.to_vec();
            let scores: Vec<f64> = gallery_rows.iter().map(|g| cosine(&probe, g)).collect();
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            order
                .iter()
                .position(|&g| gallery_labels[g] == *label)
                .expect("probe identity is enrolled")
                + 1
        })
        .collect();
    Ok(ks
        .iter()
        .map(|&k| {
            let hits = ranks.iter().filter(|&&r| r <= k).count();
            (k, hits as f64 / ranks.len() as f64)
        })
        .collect())
}
