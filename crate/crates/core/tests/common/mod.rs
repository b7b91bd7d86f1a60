#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use hnnsae::data::{prepare, synthetic_table, EncodedDataset};
use hnnsae::harness::{SuiteName, SuiteSpec};
use hnnsae::model::ModelConfig;

pub fn synthetic(n: usize, seed: u64) -> EncodedDataset {
    prepare(&synthetic_table(n, seed)).unwrap()
}

/// A suite small enough to run in a test: narrow layers, 20 epochs.
pub fn tiny_spec(suite: SuiteName) -> SuiteSpec {
    let mut spec = SuiteSpec::new(suite);
    spec.runs = 2;
    spec.base_seed = 11;
    spec.model = ModelConfig {
        epochs: 20,
        record_every: 5,
        ffn_width: 8,
        mlp_hidden: vec![8],
        learning_rate: 5e-3,
        ..ModelConfig::default()
    };
    spec.baseline.epochs = 20;
    spec.baseline.record_every = 5;
    spec.baseline.hidden = vec![8];
    spec
}

/// Every file under `dir`, relative path to bytes.
pub fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
    }
    out
}
