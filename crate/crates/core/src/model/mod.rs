//! The scoring network: language stack, region-relevance attention, weighted
//! fusion, scoring head, and the three baseline variants — forward and
//! gradient passes, plus checkpoint serialization.

pub mod checkpoint;
pub mod config;
pub mod forward;
pub mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ModelConfig, Variant};
pub use forward::{AttentionMap, BatchForward, PairBatch};
pub use params::{DenseBlock, Linear, ModelGrads, ModelParameters};
