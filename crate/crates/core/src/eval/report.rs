use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cosine_scores, embed_samples, rank_k_identification, tar_at_far, verification_accuracy_kfold, TarAtFar};
use crate::data::{build_pairs, synth_identities, IdentityDataset, PairList, Split, SynthParams};
use crate::model::ModelSnapshot;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    InDomain,
    OutOfDomain,
}

/// Metrics of one model on one evaluation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub suite: String,
    pub domain_tag: DomainTag,
    pub step_index: usize,
    pub va_mean: f64,
    pub va_std: f64,
    pub tar_at_far: Vec<TarAtFar>,
    /// `(k, rank-k rate)`.
    pub cmc: Vec<(usize, f64)>,
}

impl EvalReport {
    /// Flat `(metric, value)` view used by the CSV writer.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = vec![("va_mean".to_string(), self.va_mean), ("va_std".to_string(), self.va_std)];
        for t in &self.tar_at_far {
            out.push((format!("tar_at_far_{}", t.far), t.tar));
        }
        for (k, rate) in &self.cmc {
            out.push((format!("rank_{k}"), *rate));
        }
        out
    }
}

/// Long-format CSV: `step,suite,metric,value`.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("step,suite,metric,value\n");
    for r in reports {
        for (metric, value) in r.metrics() {
            out.push_str(&format!("{},{},{},{}\n", r.step_index, r.suite, metric, value));
        }
    }
    out
}

/// A dataset of unseen identities with its verification pairs.
#[derive(Debug, Clone)]
pub struct EvalSuite {
    pub name: String,
    pub domain_tag: DomainTag,
    pub dataset: IdentityDataset,
    pub pairs: PairList,
    pub folds: usize,
    pub far_targets: Vec<f64>,
    pub ranks: Vec<usize>,
}

/// Recipe for a synthetic [`EvalSuite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSpec {
    pub name: String,
    pub domain_tag: DomainTag,
    pub data: SynthParams,
    pub genuine_per_identity: usize,
    pub impostor_total: usize,
    pub pair_seed: u64,
    pub folds: usize,
    pub far_targets: Vec<f64>,
    pub ranks: Vec<usize>,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            name: "in_domain".into(),
            domain_tag: DomainTag::InDomain,
            data: SynthParams {
                num_identities: 32,
                identity_offset: 100_000,
                ..SynthParams::default()
            },
            genuine_per_identity: 6,
            impostor_total: 192,
            pair_seed: 0,
            folds: 10,
            far_targets: vec![1e-4, 1e-3, 1e-2, 1e-1],
            ranks: vec![1, 5],
        }
    }
}

impl SuiteSpec {
    pub fn build(&self) -> Result<EvalSuite> {
        let dataset = synth_identities(&self.data, Split::Test)?;
        let pairs = build_pairs(&dataset, self.genuine_per_identity, self.impostor_total, self.pair_seed)?.pairs;
        Ok(EvalSuite {
            name: self.name.clone(),
            domain_tag: self.domain_tag,
            dataset,
            pairs,
            folds: self.folds,
            far_targets: self.far_targets.clone(),
            ranks: self.ranks.clone(),
        })
    }
}

impl EvalSuite {
    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Eval(format!("suite {} has no pairs", self.name)));
        }
        self.pairs.validate()
    }

    pub fn evaluate(&self, model: &ModelSnapshot, step_index: usize) -> Result<EvalReport> {
        self.validate()?;
        let records = cosine_scores(model, &self.dataset, &self.pairs)?;
        let kfold = verification_accuracy_kfold(&records, self.folds)?;
        let tar = tar_at_far(&records, &self.far_targets)?;
        let cmc = if self.ranks.is_empty() {
            Vec::new()
        } else {
            self.cmc(model)?
        };
        Ok(EvalReport {
            suite: self.name.clone(),
            domain_tag: self.domain_tag,
            step_index,
            va_mean: kfold.va_mean,
            va_std: kfold.va_std,
            tar_at_far: tar,
            cmc,
        })
    }

    /// First image of every identity is enrolled; all other images probe.
    fn cmc(&self, model: &ModelSnapshot) -> Result<Vec<(usize, f64)>> {
        let groups: BTreeMap<u32, Vec<usize>> = self.dataset.by_identity();
        let gallery_idx: Vec<usize> = groups.values().map(|m| m[0]).collect();
        let probe_idx: Vec<usize> = groups.values().flat_map(|m| m[1..].iter().copied()).collect();
        if probe_idx.is_empty() {
            return Err(Error::Eval(format!("suite {} has no probe images", self.name)));
        }
        let gallery = embed_samples(model, &self.dataset, &gallery_idx)?;
        let probes = embed_samples(model, &self.dataset, &probe_idx)?;
        rank_k_identification(
            probes.view(),
            &self.dataset.identities_at(&probe_idx),
            gallery.view(),
            &self.dataset.identities_at(&gallery_idx),
            &self.ranks,
        )
    }
}

/// One report per suite for the model of `step_index`.
pub fn evaluate_step(model: &ModelSnapshot, step_index: usize, suites: &[EvalSuite]) -> Result<Vec<EvalReport>> {
    for suite in suites {
        suite.validate()?;
    }
    suites.iter().map(|s| s.evaluate(model, step_index)).collect()
}
