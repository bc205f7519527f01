//! Candidate-region assembly: NMS-filtered proposal boxes plus the
//! whole-image region, with their precomputed feature vectors.

pub mod boxes;
pub mod features_io;
pub mod nms;
pub mod proposals;
pub mod regions;

pub use boxes::{iou, BoundingBox};
pub use features_io::{load_features, write_features, FeatureMap, FEATURE_MAGIC, FEATURE_VERSION};
pub use nms::nms;
pub use proposals::{read_proposals, write_proposals, ProposalRecord};
pub use regions::{assemble_region_set, RegionSet};
