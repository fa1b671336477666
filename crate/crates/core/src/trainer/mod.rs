//! Base training, distillation-only incremental steps with a frozen teacher,
//! the reference baselines, and run-directory persistence.

mod config;
mod ledger;
mod rundir;
mod run;

pub use config::{LrSchedule, Mode, ModelConfig, RunConfig, TrainConfig};
pub use ledger::{EpochRecord, RunLedger, StepRecord, LEDGER_CSV_HEADER};
pub use rundir::{RunDir, RunDirObserver};
pub use run::{EvalObserver, NoopObserver, RunObserver, Trainer};
