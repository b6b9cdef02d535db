//! Splitting, validation-gated training, metrics and the MLP+GRU hybrid.

pub mod hybrid;
pub mod metrics;
pub mod report;
pub mod samples;
pub mod split;
pub mod train;

pub use hybrid::{combine, evaluate_hybrid, hybrid_predict, hybrid_proba, Predictor};
pub use metrics::{argmax, evaluate, predict_proba, BinaryCounts, Metrics};
pub use report::{EpochRecord, History};
pub use samples::{frame_sequences, Samples};
pub use split::{split, Split, SplitSpec};
pub use train::{train, train_model, TrainOutcome};
