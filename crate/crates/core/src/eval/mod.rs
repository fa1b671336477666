//! Verification and identification metrics over embedding similarities.

mod rank;
mod report;
mod scores;
mod tar;
mod verification;

pub use rank::rank_k_identification;
pub use report::{evaluate_step, reports_to_csv, DomainTag, EvalReport, EvalSuite, SuiteSpec};
pub use scores::{cosine, cosine_scores, embed_samples, SimilarityRecord};
pub use tar::{tar_at_far, TarAtFar};
pub use verification::{
    best_threshold, fold_bounds, verification_accuracy_kfold, KFoldVerification,
};
