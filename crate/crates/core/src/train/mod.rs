//! Adam optimization, balanced mini-batching, stratified repeated
//! cross-validation, and accuracy reporting.

pub mod adam;
pub mod folds;
pub mod trainer;

pub use adam::{adam_step, AdamState, TrainConfig};
pub use folds::{make_stratified_folds, BalancedBatcher, FoldSplit};
pub use trainer::{
    argmax, evaluate, run_cross_validation, train_model, CvOutcome, CvReport, EvalOutcome,
    FoldArtifacts, FoldReport, LrEvent, PlateauScheduler, RunArtifacts, RunReport, TrainOutcome,
};
