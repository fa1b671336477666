//! Identity datasets, step plans, batch samplers and verification pair lists.

mod batches;
mod dataset;
mod pairs;
mod plan;
mod synth;

pub use batches::{shuffled_batches, unique_identity_batches};
pub use dataset::{IdentityDataset, Sample, SampleRef, Split};
pub use pairs::{build_pairs, Pair, PairBuild, PairList};
pub use plan::{make_step_plan, make_step_plan_with_base, StepPlan};
pub use synth::{synth_identities, SynthParams};
