//! Consensus-scaled margin objective, minibatch SGD, and held-out model
//! selection.

pub mod dataset;
pub mod loss;
pub mod trainer;

pub use dataset::{encode_examples, read_dataset, write_dataset, McChoice, McExample, RawExample};
pub use loss::consensus_hinge_loss;
pub use trainer::{
    is_heldout, sgd_step, train, write_history_csv, EpochStats, TrainConfig, TrainOutcome,
};
