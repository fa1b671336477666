use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{IdentityDataset, PairList, SampleRef};
use crate::model::ModelSnapshot;
use crate::nn::{dot, l2_normalize, NORM_EPSILON};
use crate::{Error, Result};

const EMBED_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub score: f64,
    pub is_genuine: bool,
}

/// Cosine of two vectors after L2 normalization, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let ua = l2_normalize(a, NORM_EPSILON);
    let ub = l2_normalize(b, NORM_EPSILON);
    dot(&ua, &ub).clamp(-1.0, 1.0)
}

/// Embeddings of `dataset.samples[i]` for each `i` in `indices`, one row each.
pub fn embed_samples(model: &ModelSnapshot, dataset: &IdentityDataset, indices: &[usize]) -> Result<Array2<f64>> {
    let d = model.spec().embedding_dim;
    let mut out = Array2::zeros((indices.len(), d));
    for (c, chunk) in indices.chunks(EMBED_CHUNK).enumerate() {
        let features = model.forward(dataset.batch(chunk).view())?;
        out.slice_mut(ndarray::s![c * EMBED_CHUNK..c * EMBED_CHUNK + chunk.len(), ..])
            .assign(&features.embeddings);
    }
    Ok(out)
}

/// Cosine score of every pair, in pair order.
pub fn cosine_scores(model: &ModelSnapshot, dataset: &IdentityDataset, pairs: &PairList) -> Result<Vec<SimilarityRecord>> {
    if !model.is_frozen() {
        return Err(Error::Contract("scoring requires a frozen snapshot".into()));
    }
    let refs: BTreeSet<SampleRef> = pairs.pairs.iter().flat_map(|p| [p.a, p.b]).collect();
    let missing: Vec<String> = refs
        .iter()
        .filter(|r| dataset.position(**r).is_none())
        .map(|r| r.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Eval(format!(
            "{} pair samples are not in the dataset: {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    let refs: Vec<SampleRef> = refs.into_iter().collect();
    let indices: Vec<usize> = refs.iter().map(|r| dataset.position(*r).expect("checked")).collect();
    let emb = embed_samples(model, dataset, &indices)?;
    let row: HashMap<SampleRef, usize> = refs.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    Ok(pairs
        .pairs
        .iter()
        .map(|p| {
            let a = emb.row(row[&p.a]).to_vec();
            let b = emb.row(row[&p.b]).to_vec();
            SimilarityRecord {
                score: cosine(&a, &b),
                is_genuine: p.is_genuine,
            }
        })
        .collect())
}
