use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::rng::rng_for;
use crate::{Error, Result};

/// Shuffled mini-batches over `0..n`; the last batch may be smaller.
pub fn shuffled_batches(n: usize, batch_size: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(batch_size > 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &[0]));
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// One epoch of batches in which no identity appears twice.
///
/// `identities[i]` is the identity of sample `i`; the returned batches hold
/// sample positions. Each sample is used at most once. Identities are drawn
/// preferring those with the most samples left, so the epoch covers as many
/// samples as possible; samples that cannot fill a full batch are dropped.
pub fn unique_identity_batches(identities: &[u32], batch_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::config("batch size must be positive"));
    }
    let mut queues: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &id) in identities.iter().enumerate() {
        queues.entry(id).or_default().push(i);
    }
    if queues.len() < batch_size {
        return Err(Error::config(format!(
            "batch size {batch_size} exceeds the {} distinct identities of this step; reduce the batch size",
            queues.len()
        )));
    }
    let mut rng = rng_for(seed, &[1]);
    let mut queues: Vec<Vec<usize>> = queues.into_values().collect();
    for q in &mut queues {
        q.shuffle(&mut rng);
    }
    let mut batches = Vec::new();
    loop {
        let mut live: Vec<usize> = (0..queues.len()).filter(|&k| !queues[k].is_empty()).collect();
        if live.len() < batch_size {
            break;
        }
        live.shuffle(&mut rng);
        live.sort_by_key(|&k| std::cmp::Reverse(queues[k].len()));
        let batch: Vec<usize> = live[..batch_size]
            .iter()
            .map(|&k| queues[k].pop().expect("live queue"))
            .collect();
        batches.push(batch);
    }
    batches.shuffle(&mut rng);
    Ok(batches)
}
