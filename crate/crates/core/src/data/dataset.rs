use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, Array4, Axis};
use serde::{Deserialize, Serialize};

use super::SynthParams;
use crate::{Error, Result};

/// `identity/index` address of one image, where `index` counts the images of
/// that identity from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleRef {
    pub identity: u32,
    pub index: u32,
}

impl fmt::Display for SampleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:05}/{:04}", self.identity, self.index)
    }
}

impl FromStr for SampleRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (id, idx) = s
            .split_once('/')
            .ok_or_else(|| Error::validation(format!("sample path {s:?} is not identity/index")))?;
        let parse = |v: &str| {
            v.parse::<u32>()
                .map_err(|_| Error::validation(format!("sample path {s:?} is not numeric")))
        };
        Ok(SampleRef {
            identity: parse(id)?,
            index: parse(idx)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Array3<f64>,
    pub identity: u32,
    pub index: u32,
}

impl Sample {
    pub fn sample_ref(&self) -> SampleRef {
        SampleRef {
            identity: self.identity,
            index: self.index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct IdentityDataset {
    pub samples: Vec<Sample>,
    pub identity_ids: BTreeSet<u32>,
    pub split: Split,
    /// Generator parameters when the dataset is synthetic.
    pub generator: Option<SynthParams>,
    lookup: HashMap<SampleRef, usize>,
}

impl PartialEq for IdentityDataset {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
            && self.identity_ids == other.identity_ids
            && self.split == other.split
            && self.generator == other.generator
    }
}

impl IdentityDataset {
    pub fn new(samples: Vec<Sample>, split: Split, generator: Option<SynthParams>) -> Result<Self> {
        let identity_ids = samples.iter().map(|s| s.identity).collect();
        let mut lookup = HashMap::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if lookup.insert(s.sample_ref(), i).is_some() {
                return Err(Error::validation(format!("duplicate sample {}", s.sample_ref())));
            }
        }
        if let Some(first) = samples.first() {
            if samples.iter().any(|s| s.image.dim() != first.image.dim()) {
                return Err(Error::validation("all images must share one shape"));
            }
        }
        Ok(Self {
            samples,
            identity_ids,
            split,
            generator,
            lookup,
        })
    }

    /// Samples of both datasets in one; identities must not overlap. The
    /// result has no single generator.
    pub fn merge(self, other: IdentityDataset) -> Result<Self> {
        if self.split != other.split {
            return Err(Error::validation("cannot merge train and test datasets"));
        }
        if let Some(id) = self.identity_ids.intersection(&other.identity_ids).next() {
            return Err(Error::validation(format!("identity {id} appears in both datasets")));
        }
        let split = self.split;
        let mut samples = self.samples;
        samples.extend(other.samples);
        Self::new(samples, split, None)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn image_shape(&self) -> Option<(usize, usize, usize)> {
        self.samples.first().map(|s| s.image.dim())
    }

    pub fn position(&self, r: SampleRef) -> Option<usize> {
        self.lookup.get(&r).copied()
    }

    /// Indices of samples whose identity is in `identities`, in dataset order.
    pub fn indices_of(&self, identities: &BTreeSet<u32>) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| identities.contains(&s.identity))
            .map(|(i, _)| i)
            .collect()
    }

    /// Sample indices grouped per identity.
    pub fn by_identity(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            out.entry(s.identity).or_default().push(i);
        }
        out
    }

    /// Stack the given samples into a `(B, C, H, W)` batch.
    pub fn batch(&self, indices: &[usize]) -> Array4<f64> {
        let views: Vec<_> = indices.iter().map(|&i| self.samples[i].image.view()).collect();
        ndarray::stack(Axis(0), &views).expect("uniform image shapes")
    }

    pub fn identities_at(&self, indices: &[usize]) -> Vec<u32> {
        indices.iter().map(|&i| self.samples[i].identity).collect()
    }
}
