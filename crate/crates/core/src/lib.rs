//! Region-attention scorer for multiple-choice visual question answering.
//!
//! The model embeds a binned question/answer representation and a set of
//! image-region features into a shared space, weights regions by softmaxed
//! inner products, and scores the pair from the attention-weighted fusion.
//! Training maximizes a margin between correct and incorrect choices, scaled
//! by the gap in annotator agreement.

pub mod error;
pub mod evaluation;
pub mod language;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod training;
pub mod vision;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar for the shipped binaries and tests. Gradient checks at the
/// tolerances asserted in the test suite require 64-bit floats.
pub type Real = f64;

pub type Tensor = numerics::Tensor2<Real>;
pub type ModelParameters = model::ModelParameters<Real>;
pub type ModelGrads = model::ModelGrads<Real>;
pub type AttentionMap = model::AttentionMap<Real>;
pub type EmbeddingTable = language::EmbeddingTable<Real>;
pub type LanguageEncoding = language::LanguageEncoding<Real>;
pub type RegionSet = vision::RegionSet<Real>;
pub type FeatureMap = vision::FeatureMap<Real>;
pub type McExample = training::McExample<Real>;
