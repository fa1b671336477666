//! Small synthetic setups for trainer-level tests.

use lifelong_core::data::{make_step_plan, synth_identities, IdentityDataset, Split, StepPlan, SynthParams};
use lifelong_core::eval::{EvalSuite, SuiteSpec};
use lifelong_core::trainer::{LrSchedule, Mode, RunConfig};

/// 12 single-channel 8x8 identities with 4 images each.
pub fn tiny_data() -> SynthParams {
    SynthParams {
        num_identities: 12,
        images_per_identity: 4,
        image_shape: (1, 8, 8),
        template_resolution: 4,
        max_shift: 1,
        ..SynthParams::default()
    }
}

pub fn tiny_dataset() -> IdentityDataset {
    synth_identities(&tiny_data(), Split::Train).unwrap()
}

pub fn tiny_plan(dataset: &IdentityDataset, steps: usize) -> StepPlan {
    make_step_plan(dataset, 0.5, steps, 3, false).unwrap()
}

pub fn tiny_config(mode: Mode) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.model.channels = vec![3, 4, 6];
    cfg.model.embedding_dim = 6;
    cfg.train.batch_size = 4;
    cfg.train.base_epochs = 3;
    cfg.train.incr_epochs = 2;
    cfg.train.lr_base = 0.01;
    cfg.train.margin_scale = 16.0;
    cfg.train.margin = 0.3;
    cfg.train.mode = mode;
    cfg.train.seed = 11;
    cfg
}

pub fn tiny_suite() -> EvalSuite {
    SuiteSpec {
        data: SynthParams {
            num_identities: 6,
            identity_offset: 500,
            ..tiny_data()
        },
        genuine_per_identity: 3,
        impostor_total: 18,
        ranks: vec![1, 3],
        ..SuiteSpec::default()
    }
    .build()
    .unwrap()
}

/// Identities are mixtures of 8 shared attribute patterns, so features
/// learned on one set of identities transfer to unseen ones.
pub fn forgetting_data() -> SynthParams {
    SynthParams {
        num_identities: 64,
        images_per_identity: 16,
        image_shape: (3, 16, 16),
        attribute_count: 8,
        attribute_domain: 1,
        ..SynthParams::default()
    }
}

/// Held-out identities of the same domain.
pub fn forgetting_suite() -> EvalSuite {
    SuiteSpec {
        name: "base_domain".into(),
        data: SynthParams {
            identity_offset: 100_000,
            ..forgetting_data()
        },
        genuine_per_identity: 10,
        impostor_total: 640,
        ranks: vec![],
        ..SuiteSpec::default()
    }
    .build()
    .unwrap()
}

/// Desk-scale training settings for the forgetting experiment. Incremental
/// settings keep their defaults.
pub fn forgetting_config(mode: Mode, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.model.channels = vec![8, 16, 32];
    cfg.model.embedding_dim = 32;
    cfg.train.batch_size = 8;
    cfg.train.base_epochs = 40;
    cfg.train.lr_base = 0.005;
    cfg.train.base_schedule = LrSchedule::Step {
        milestones: vec![20, 40],
        factor: 0.1,
    };
    cfg.train.margin_scale = 16.0;
    cfg.train.margin = 0.3;
    cfg.train.mode = mode;
    cfg.train.seed = seed;
    cfg
}
