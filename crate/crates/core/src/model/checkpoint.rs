//! Model files.
//!
//! A checkpoint is a UTF-8 JSON document:
//!
//! ```text
//! {
//!   "format": "hnnsae-checkpoint",
//!   "version": 1,
//!   "config": { ...ModelConfig... },
//!   "levels": [[...], ...],              // categorical levels, token order
//!   "params": [{"name": "...", "shape": [r, c], "values": [...]}, ...],
//!   "digest": "<sha256 hex>"
//! }
//! ```
//!
//! Values are written with round-trip precision. The digest is SHA-256 over
//! each parameter's name, shape (u64 little-endian) and values (f64
//! little-endian), in file order, and is verified on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HnnsaeModel, ModelConfig, ParamSet};
use crate::numcore::Tensor;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "hnnsae-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    levels: Vec<Vec<String>>,
    params: Vec<ParamEntry>,
    digest: String,
}

impl HnnsaeModel {
    pub fn to_checkpoint_json(&self) -> Result<String> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            levels: self.levels.clone(),
            params: self
                .params
                .names
                .iter()
                .zip(&self.params.tensors)
                .map(|(n, t)| ParamEntry {
                    name: n.clone(),
                    shape: t.shape().to_vec(),
                    values: t.data().to_vec(),
                })
                .collect(),
            digest: self.digest(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(Error::Serde(format!(
                "unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                file.format, file.version
            )));
        }
        let mut params = ParamSet {
            names: Vec::with_capacity(file.params.len()),
            tensors: Vec::with_capacity(file.params.len()),
        };
        for p in file.params {
            params.names.push(p.name);
            params.tensors.push(Tensor::new(p.shape, p.values)?);
        }
        if params.digest() != file.digest {
            return Err(Error::Serde("checkpoint digest mismatch".into()));
        }
        HnnsaeModel::from_parts(file.config, file.levels, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json()?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = Error::read_input(path)?;
        HnnsaeModel::from_checkpoint_json(&text)
    }
}
