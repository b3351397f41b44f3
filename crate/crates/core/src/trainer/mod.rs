//! Training utilities: hierarchical batches, the learning-rate schedule,
//! per-batch standardization, and a linear toy model trained on synthetic
//! shots to exercise the loss end to end.

mod batch;
mod config;
mod norm;
mod schedule;
mod toy;

pub use batch::{hierarchical_batch, BatchParams, BatchPlan, Shot, ShotDataset};
pub use config::{DataParams, ToyRun, TrainConfig};
pub use norm::{batch_normalize, batch_normalize_backward, NormCache};
pub use schedule::{learning_rate, Schedule, WARMUP_STEPS};
pub use toy::{
    generate_toy_data, history_csv, train_toy, HistoryRow, ToyData, ToyModel, TrainOptions,
    HISTORY_HEADER,
};
