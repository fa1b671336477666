use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{IdentityDataset, SynthParams};
use crate::rng::rng_for;
use crate::{Error, Result};

/// Base identities plus the identity sets of steps `1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub base_fraction: f64,
    pub step_count: usize,
    pub allow_overlap: bool,
    pub seed: u64,
    /// Seeded permutation of the train identities the split was cut from.
    pub class_order: Vec<u32>,
    pub base_identities: BTreeSet<u32>,
    pub step_identity_sets: Vec<BTreeSet<u32>>,
    /// Generator of the train data, when synthetic.
    pub dataset: Option<SynthParams>,
}

impl StepPlan {
    /// Identities trained at step `t` (`0` is the base step).
    pub fn identities(&self, t: usize) -> &BTreeSet<u32> {
        if t == 0 {
            &self.base_identities
        } else {
            &self.step_identity_sets[t - 1]
        }
    }

    pub fn union(&self) -> BTreeSet<u32> {
        let mut all = self.base_identities.clone();
        for s in &self.step_identity_sets {
            all.extend(s.iter().copied());
        }
        all
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: StepPlan = serde_json::from_str(text)?;
        if plan.step_identity_sets.len() != plan.step_count {
            return Err(Error::validation("step_count does not match the listed step sets"));
        }
        Ok(plan)
    }

    /// Every planned identity must be a train identity of `dataset`.
    pub fn check_against(&self, dataset: &IdentityDataset) -> Result<()> {
        let missing: Vec<u32> = self
            .union()
            .difference(&dataset.identity_ids)
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(Error::validation(format!(
                "plan references identities absent from the dataset: {missing:?}"
            )));
        }
        Ok(())
    }

    /// `(step, identity count)` rows for summaries.
    pub fn summary_rows(&self) -> Vec<(usize, usize)> {
        (0..=self.step_count).map(|t| (t, self.identities(t).len())).collect()
    }
}

/// Shuffle the train identities with `seed`, give the first
/// `floor(base_fraction * K)` to the base step and split the rest into
/// `step_count` near-equal sets (sizes differ by at most one).
pub fn make_step_plan(
    dataset: &IdentityDataset,
    base_fraction: f64,
    step_count: usize,
    seed: u64,
    allow_overlap: bool,
) -> Result<StepPlan> {
    if !(base_fraction > 0.0 && base_fraction <= 1.0) {
        return Err(Error::config(format!("base_fraction {base_fraction} is outside (0, 1]")));
    }
    let k = dataset.identity_ids.len();
    // Tolerate representation error in fractions such as 0.1 * 30.
    let base_count = ((base_fraction * k as f64) + 1e-9).floor() as usize;
    if base_count == 0 {
        return Err(Error::config(format!(
            "base_fraction {base_fraction} of {k} identities leaves the base step empty"
        )));
    }
    let remaining = k - base_count;
    if step_count > remaining {
        return Err(Error::config(format!(
            "{step_count} steps requested but only {remaining} identities remain after the base split"
        )));
    }
    let mut class_order: Vec<u32> = dataset.identity_ids.iter().copied().collect();
    class_order.shuffle(&mut rng_for(seed, &[0]));
    let base_identities: BTreeSet<u32> = class_order[..base_count].iter().copied().collect();
    let step_identity_sets = split_steps(&class_order[base_count..], step_count, seed, allow_overlap);
    Ok(StepPlan {
        base_fraction,
        step_count,
        allow_overlap,
        seed,
        class_order,
        base_identities,
        step_identity_sets,
        dataset: dataset.generator.clone(),
    })
}

fn split_steps(rest: &[u32], step_count: usize, seed: u64, allow_overlap: bool) -> Vec<BTreeSet<u32>> {
    let remaining = rest.len();
    let mut step_identity_sets = Vec::with_capacity(step_count);
    if let (Some(size), Some(extra)) = (remaining.checked_div(step_count), remaining.checked_rem(step_count)) {
        let mut start = 0;
        for t in 0..step_count {
            let len = size + usize::from(t >= step_count - extra);
            let set = if allow_overlap {
                let mut pool = rest.to_vec();
                pool.shuffle(&mut rng_for(seed, &[1, t as u64]));
                pool[..len].iter().copied().collect()
            } else {
                rest[start..start + len].iter().copied().collect()
            };
            start += len;
            step_identity_sets.push(set);
        }
    }
    step_identity_sets
}

/// Like [`make_step_plan`] but with a caller-chosen base set, e.g. when the
/// incremental identities come from a different capture domain. The other
/// identities are shuffled with `seed` and split into `step_count` sets.
pub fn make_step_plan_with_base(
    dataset: &IdentityDataset,
    base_identities: BTreeSet<u32>,
    step_count: usize,
    seed: u64,
    allow_overlap: bool,
) -> Result<StepPlan> {
    if base_identities.is_empty() {
        return Err(Error::config("the base step needs at least one identity"));
    }
    if let Some(id) = base_identities.difference(&dataset.identity_ids).next() {
        return Err(Error::config(format!("base identity {id} is not in the dataset")));
    }
    let mut rest: Vec<u32> = dataset.identity_ids.difference(&base_identities).copied().collect();
    if step_count > rest.len() {
        return Err(Error::config(format!(
            "{step_count} steps requested but only {} identities remain after the base split",
            rest.len()
        )));
    }
    rest.shuffle(&mut rng_for(seed, &[0]));
    let step_identity_sets = split_steps(&rest, step_count, seed, allow_overlap);
    let mut class_order: Vec<u32> = base_identities.iter().copied().collect();
    class_order.extend(&rest);
    Ok(StepPlan {
        base_fraction: base_identities.len() as f64 / dataset.identity_ids.len() as f64,
        step_count,
        allow_overlap,
        seed,
        class_order,
        base_identities,
        step_identity_sets,
        dataset: dataset.generator.clone(),
    })
}
