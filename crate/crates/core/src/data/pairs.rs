use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{IdentityDataset, SampleRef};
use crate::rng::rng_for;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub a: SampleRef,
    pub b: SampleRef,
    pub is_genuine: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairList {
    pub pairs: Vec<Pair>,
}

impl PairList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// One pair per line: `path_a<TAB>path_b<TAB>{0|1}`.
    pub fn to_text(&self) -> String {
        self.pairs
            .iter()
            .map(|p| format!("{}\t{}\t{}\n", p.a, p.b, u8::from(p.is_genuine)))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [a, b, label] = fields.as_slice() else {
                return Err(Error::validation(format!("pair line {} has {} fields", n + 1, fields.len())));
            };
            let is_genuine = match label.trim() {
                "1" => true,
                "0" => false,
                other => return Err(Error::validation(format!("pair line {}: label {other:?}", n + 1))),
            };
            pairs.push(Pair {
                a: a.parse()?,
                b: b.parse()?,
                is_genuine,
            });
        }
        Ok(Self { pairs })
    }

    /// Genuine pairs must share an identity and impostor pairs must not.
    pub fn validate(&self) -> Result<()> {
        for p in &self.pairs {
            if (p.a.identity == p.b.identity) != p.is_genuine {
                return Err(Error::validation(format!("pair {} {} is mislabelled", p.a, p.b)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairBuild {
    pub pairs: PairList,
    /// Identities with fewer than two images, for which no genuine pair exists.
    pub skipped_identities: usize,
}

fn unordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Sample `genuine_per_identity` distinct same-identity pairs for each
/// identity with at least two images and `impostor_total` distinct
/// cross-identity pairs, then shuffle the whole list.
pub fn build_pairs(
    dataset: &IdentityDataset,
    genuine_per_identity: usize,
    impostor_total: usize,
    seed: u64,
) -> Result<PairBuild> {
    let groups = dataset.by_identity();
    let mut out: Vec<(usize, usize, bool)> = Vec::new();
    let mut skipped = 0;
    for (&id, members) in &groups {
        if genuine_per_identity == 0 {
            break;
        }
        if members.len() < 2 {
            skipped += 1;
            continue;
        }
        let available = members.len() * (members.len() - 1) / 2;
        if genuine_per_identity > available {
            return Err(Error::config(format!(
                "identity {id} has {} images, so at most {available} genuine pairs, but {genuine_per_identity} were requested",
                members.len()
            )));
        }
        let mut all: Vec<(usize, usize)> = Vec::with_capacity(available);
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                all.push((a, b));
            }
        }
        all.shuffle(&mut rng_for(seed, &[0, id as u64]));
        out.extend(all[..genuine_per_identity].iter().map(|&(a, b)| (a, b, true)));
    }

    let n = dataset.len();
    let same: usize = groups.values().map(|m| m.len() * m.len().saturating_sub(1) / 2).sum();
    let max_impostors = n * n.saturating_sub(1) / 2 - same;
    if impostor_total > max_impostors {
        return Err(Error::config(format!(
            "{impostor_total} impostor pairs requested but only {max_impostors} exist"
        )));
    }
    let mut rng = rng_for(seed, &[1]);
    if impostor_total * 2 > max_impostors {
        let mut all = Vec::with_capacity(max_impostors);
        for a in 0..n {
            for b in a + 1..n {
                if dataset.samples[a].identity != dataset.samples[b].identity {
                    all.push((a, b));
                }
            }
        }
        all.shuffle(&mut rng);
        out.extend(all[..impostor_total].iter().map(|&(a, b)| (a, b, false)));
    } else {
        let mut seen = HashSet::with_capacity(impostor_total);
        while seen.len() < impostor_total {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if dataset.samples[a].identity == dataset.samples[b].identity {
                continue;
            }
            let key = unordered(a, b);
            if seen.insert(key) {
                out.push((key.0, key.1, false));
            }
        }
    }
    out.shuffle(&mut rng_for(seed, &[2]));
    let pairs = out
        .into_iter()
        .map(|(a, b, is_genuine)| Pair {
            a: dataset.samples[a].sample_ref(),
            b: dataset.samples[b].sample_ref(),
            is_genuine,
        })
        .collect();
    Ok(PairBuild {
        pairs: PairList { pairs },
        skipped_identities: skipped,
    })
}
