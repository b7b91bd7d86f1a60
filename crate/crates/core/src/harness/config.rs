//! TOML configuration files.
//!
//! Suite file (every key optional; command-line flags win):
//!
//! ```toml
//! [suite]
//! name = "anova-grid"
//! runs = 5
//! base_seed = 0
//! split_ratio = 0.8
//! workers = 4
//! parallelism = "parallel"     # or "sequential"
//! input = "data/Churn_Modelling.csv"
//!
//! [model]                      # any ModelConfig field
//! epochs = 1000
//! d_model = 16
//!
//! [baseline]                   # any BaselineConfig field
//! max_depth = 8
//! ```
//!
//! Train file:
//!
//! ```toml
//! input = "data/Churn_Modelling.csv"   # raw CSV or a prepared JSON dataset
//! out = "runs/single"
//! split_ratio = 0.8
//!
//! [model]
//! heads = 8
//! seed = 3
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::spec::{SuiteName, SuiteSpec};
use crate::baselines::BaselineConfig;
use crate::model::ModelConfig;
use crate::{Error, Parallelism, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    pub name: Option<SuiteName>,
    pub runs: Option<usize>,
    pub base_seed: Option<u64>,
    pub split_ratio: Option<f64>,
    pub workers: Option<usize>,
    pub parallelism: Option<Parallelism>,
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteFile {
    pub suite: SuiteSection,
    pub model: ModelConfig,
    pub baseline: BaselineConfig,
}

fn read(path: &Path) -> Result<String> {
    Error::read_input(path)
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_relative() {
        base.parent().map(|d| d.join(&p)).unwrap_or(p)
    } else {
        p
    }
}

impl SuiteFile {
    pub fn parse(text: &str) -> Result<SuiteFile> {
        parse(text, Path::new("<suite config>"))
    }

    pub fn load(path: &Path) -> Result<SuiteFile> {
        let mut f: SuiteFile = parse(&read(path)?, path)?;
        f.suite.input = f.suite.input.map(|p| resolve(path, p));
        Ok(f)
    }

    /// Spec for `name` (or the file's own name), file values over defaults.
    pub fn to_spec(&self, name: Option<SuiteName>) -> Result<SuiteSpec> {
        let name = name
            .or(self.suite.name)
            .ok_or_else(|| Error::InvalidArgument("no suite name given".into()))?;
        let mut spec = SuiteSpec::new(name);
        let s = &self.suite;
        spec.runs = s.runs.unwrap_or(spec.runs);
        spec.base_seed = s.base_seed.unwrap_or(spec.base_seed);
        spec.split_ratio = s.split_ratio.unwrap_or(spec.split_ratio);
        spec.workers = s.workers.unwrap_or(spec.workers);
        spec.parallelism = s.parallelism.unwrap_or(spec.parallelism);
        spec.model = self.model.clone();
        spec.baseline = self.baseline.clone();
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub input: PathBuf,
    pub out: PathBuf,
    #[serde(default = "default_ratio")]
    pub split_ratio: f64,
    #[serde(default)]
    pub model: ModelConfig,
}

fn default_ratio() -> f64 {
    0.8
}

impl TrainFile {
    pub fn parse(text: &str) -> Result<TrainFile> {
        parse(text, Path::new("<train config>"))
    }

    pub fn load(path: &Path) -> Result<TrainFile> {
        let mut f: TrainFile = parse(&read(path)?, path)?;
        f.input = resolve(path, f.input);
        f.out = resolve(path, f.out);
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_file_overrides_defaults() {
        let f = SuiteFile::parse(
            "[suite]\nname = \"heads-ablation\"\nruns = 3\n[model]\nepochs = 200\n[baseline]\nmax_depth = 4\n",
        )
        .unwrap();
        let spec = f.to_spec(None).unwrap();
        assert_eq!(spec.suite, SuiteName::HeadsAblation);
        assert_eq!(spec.runs, 3);
        assert_eq!(spec.model.epochs, 200);
        assert_eq!(spec.model.heads, 8);
        assert_eq!(spec.baseline.max_depth, 4);
        assert_eq!(f.to_spec(Some(SuiteName::Baselines)).unwrap().suite, SuiteName::Baselines);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(SuiteFile::parse("[model]\nheadz = 3\n").is_err());
        assert!(SuiteFile::parse("[suite]\nname = \"nope\"\n").is_err());
        assert!(SuiteFile::default().to_spec(None).is_err());
    }

    #[test]
    fn train_file_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(&path, "input = \"d.csv\"\nout = \"/abs/out\"\n[model]\nheads = 4\n").unwrap();
        let f = TrainFile::load(&path).unwrap();
        assert_eq!(f.input, dir.path().join("d.csv"));
        assert_eq!(f.out, PathBuf::from("/abs/out"));
        assert_eq!(f.model.heads, 4);
        assert_eq!(f.split_ratio, 0.8);
    }
}
