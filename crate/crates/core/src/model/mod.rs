//! The attention churn network.
//!
//! Each customer row becomes ten tokens of width `d_model`: one embedding row
//! per categorical feature and one learned affine map per numeric feature.
//! The tokens go through one multi-head self-attention block with a residual
//! connection, a position-wise residual feed-forward block, and are then
//! flattened into an MLP that outputs a churn logit.

mod checkpoint;
mod config;
mod forward;
mod params;
mod train;

pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::ModelConfig;
pub use forward::{attention_head, classifier, extractor, multi_head, Batch, ForwardPass, HeadVars};
pub use params::{HnnsaeModel, ParamSet};
pub use train::{predict, train, train_with, Checkpoint, RunConfig, RunRecord};

/// Tokens per row: five categorical then five numeric.
pub const NUM_TOKENS: usize = crate::data::NUM_FEATURES;
