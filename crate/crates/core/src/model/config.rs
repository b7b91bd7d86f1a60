use serde::{Deserialize, Serialize};

use crate::numcore::AdamConfig;
use crate::{Error, Result};

/// Architecture and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub heads: usize,
    pub ffn_width: usize,
    pub mlp_hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Checkpoint (train loss, test AUC) every this many epochs.
    pub record_every: usize,
    pub seed: u64,
    pub use_entity_embedding: bool,
    pub use_smote: bool,
    pub smote_k: usize,
    /// Half-width of the uniform embedding initialisation.
    pub embedding_init: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 16,
            heads: 8,
            ffn_width: 64,
            mlp_hidden: vec![128, 64, 32],
            epochs: 1000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            record_every: 50,
            seed: 0,
            use_entity_embedding: true,
            use_smote: true,
            smote_k: 5,
            embedding_init: 0.05,
        }
    }
}

impl ModelConfig {
    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.d_model == 0 || self.heads == 0 || self.d_model % self.heads != 0 {
            return bad(format!("heads ({}) must divide d_model ({})", self.heads, self.d_model));
        }
        if self.ffn_width == 0 || self.mlp_hidden.is_empty() || self.mlp_hidden.contains(&0) {
            return bad("ffn_width and every mlp_hidden width must be positive".into());
        }
        if self.record_every == 0 || self.epochs < self.record_every {
            return bad(format!(
                "record_every ({}) must be positive and at most epochs ({})",
                self.record_every, self.epochs
            ));
        }
        if self.embedding_init <= 0.0 {
            return bad("embedding_init must be positive".into());
        }
        self.adam().validate()
    }
}
