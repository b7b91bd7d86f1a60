use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineConfig, BaselineKind};
use crate::model::{ModelConfig, RunConfig};
use crate::{Error, Parallelism, Result};

/// Head counts crossed with SMOTE in the factorial grid.
pub const HEAD_GRID: [usize; 4] = [2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    SmoteAblation,
    HeadsAblation,
    AnovaGrid,
    EmbeddingAblation,
    Baselines,
}

impl SuiteName {
    pub const ALL: [SuiteName; 5] = [
        SuiteName::SmoteAblation,
        SuiteName::HeadsAblation,
        SuiteName::AnovaGrid,
        SuiteName::EmbeddingAblation,
        SuiteName::Baselines,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::SmoteAblation => "smote-ablation",
            SuiteName::HeadsAblation => "heads-ablation",
            SuiteName::AnovaGrid => "anova-grid",
            SuiteName::EmbeddingAblation => "embedding-ablation",
            SuiteName::Baselines => "baselines",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SuiteName::ALL.iter().map(|n| n.as_str()).collect();
                Error::InvalidArgument(format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Everything that determines a suite's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub suite: SuiteName,
    pub runs: usize,
    pub base_seed: u64,
    pub split_ratio: f64,
    /// Template for every attention-model cell; the suite overrides the
    /// factor it varies plus the seed.
    pub model: ModelConfig,
    /// Template for baseline cells; the suite sets kind, seed and SMOTE use.
    pub baseline: BaselineConfig,
    /// Concurrent runs. 0 uses every available core.
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub parallelism: Parallelism,
}

fn default_workers() -> usize {
    1
}

impl SuiteSpec {
    pub fn new(suite: SuiteName) -> SuiteSpec {
        SuiteSpec {
            suite,
            runs: 5,
            base_seed: 0,
            split_ratio: 0.8,
            model: ModelConfig::default(),
            baseline: BaselineConfig::default(),
            workers: 1,
            parallelism: Parallelism::default(),
        }
    }

    /// Checkpoint epochs used by the summaries: first, middle and last.
    pub fn epochs(&self) -> (usize, usize, usize) {
        let m = &self.model;
        (m.record_every, m.epochs / 2, m.epochs)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.runs < 2 {
            return bad(format!("runs per cell must be at least 2, got {}", self.runs));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split ratio must lie in (0, 1), got {}", self.split_ratio));
        }
        self.model.validate()?;
        let (early, mid, late) = self.epochs();
        if mid % early != 0 || late % early != 0 || mid <= early {
            return bad(format!(
                "epochs ({late}) and epochs/2 ({mid}) must be multiples of record_every ({early}) with epochs/2 > record_every"
            ));
        }
        for cell in self.cells() {
            match &cell.config {
                RunConfig::Hnnsae(c) => c.validate()?,
                RunConfig::Baseline(c) => c.validate()?,
            }
        }
        Ok(())
    }

    fn hnnsae(&self, id: String, f: impl FnOnce(&mut ModelConfig)) -> Cell {
        let mut c = self.model.clone();
        f(&mut c);
        Cell {
            id,
            config: RunConfig::Hnnsae(c),
        }
    }

    /// The cells of this suite, in report order.
    pub fn cells(&self) -> Vec<Cell> {
        match self.suite {
            SuiteName::SmoteAblation => [false, true]
                .map(|s| self.hnnsae(format!("smote-{}", on_off(s)), |c| c.use_smote = s))
                .to_vec(),
            SuiteName::HeadsAblation => HEAD_GRID
                .map(|h| {
                    self.hnnsae(format!("heads-{h}"), |c| {
                        c.heads = h;
                        c.use_smote = true;
                    })
                })
                .to_vec(),
            SuiteName::AnovaGrid => [false, true]
                .into_iter()
                .flat_map(|s| {
                    HEAD_GRID.map(|h| {
                        self.hnnsae(format!("smote-{}-heads-{h}", on_off(s)), |c| {
                            c.heads = h;
                            c.use_smote = s;
                        })
                    })
                })
                .collect(),
            SuiteName::EmbeddingAblation => [true, false]
                .map(|e| {
                    self.hnnsae(format!("embedding-{}", on_off(e)), |c| {
                        c.use_entity_embedding = e;
                        c.use_smote = true;
                    })
                })
                .to_vec(),
            SuiteName::Baselines => {
                let mut cells = vec![self.hnnsae("hnnsae-smote-on".into(), |c| c.use_smote = true)];
                for s in [true, false] {
                    for kind in BaselineKind::ALL {
                        let mut c = self.baseline.clone();
                        c.kind = kind;
                        c.use_smote = s;
                        cells.push(Cell {
                            id: format!("{}-smote-{}", kind.name(), on_off(s)),
                            config: RunConfig::Baseline(c),
                        });
                    }
                }
                cells
            }
        }
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// One configuration repeated `runs` times.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    /// Seed fields are placeholders; each run substitutes its own.
    pub config: RunConfig,
}

impl Cell {
    pub fn uses_smote(&self) -> bool {
        match &self.config {
            RunConfig::Hnnsae(c) => c.use_smote,
            RunConfig::Baseline(c) => c.use_smote,
        }
    }

    pub(crate) fn smote_k(&self) -> usize {
        match &self.config {
            RunConfig::Hnnsae(c) => c.smote_k,
            RunConfig::Baseline(_) => 5,
        }
    }

    /// Configuration of run `run_index` under `base_seed`.
    pub fn run_config(&self, base_seed: u64, run_index: usize) -> RunConfig {
        let seed = run_seed(base_seed, run_index);
        match &self.config {
            RunConfig::Hnnsae(c) => RunConfig::Hnnsae(ModelConfig { seed, ..c.clone() }),
            RunConfig::Baseline(c) => RunConfig::Baseline(BaselineConfig { seed, ..c.clone() }),
        }
    }
}

/// Seeds depend only on the run index, so every cell sees the same split and
/// the same SMOTE draw for a given index.
pub fn run_seed(base_seed: u64, run_index: usize) -> u64 {
    base_seed.wrapping_add(run_index as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_counts() {
        let counts: Vec<usize> = SuiteName::ALL.iter().map(|&n| SuiteSpec::new(n).cells().len()).collect();
        assert_eq!(counts, vec![2, 4, 8, 2, 7]);
    }

    #[test]
    fn names_round_trip() {
        for n in SuiteName::ALL {
            assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), n);
        }
        assert!("smote".parse::<SuiteName>().is_err());
    }

    #[test]
    fn cells_vary_one_factor() {
        let cells = SuiteSpec::new(SuiteName::SmoteAblation).cells();
        let (RunConfig::Hnnsae(a), RunConfig::Hnnsae(b)) = (&cells[0].config, &cells[1].config) else {
            panic!()
        };
        assert_eq!(
            ModelConfig {
                use_smote: true,
                ..a.clone()
            },
            *b
        );
        assert_eq!(a.heads, 8);
    }

    #[test]
    fn run_seeds_ignore_the_cell() {
        let cells = SuiteSpec::new(SuiteName::AnovaGrid).cells();
        let seeds: Vec<u64> = cells
            .iter()
            .map(|c| match c.run_config(10, 3) {
                RunConfig::Hnnsae(m) => m.seed,
                RunConfig::Baseline(b) => b.seed,
            })
            .collect();
        assert!(seeds.iter().all(|&s| s == 13));
    }

    #[test]
    fn validation() {
        let mut s = SuiteSpec::new(SuiteName::HeadsAblation);
        assert!(s.validate().is_ok());
        s.runs = 1;
        assert!(s.validate().is_err());
        s.runs = 2;
        s.model.epochs = 70;
        assert!(s.validate().is_err());
        s.model.epochs = 100;
        assert!(s.validate().is_err(), "middle checkpoint must follow the first");
        s.model.epochs = 200;
        assert!(s.validate().is_ok());
        s.model.d_model = 12;
        assert!(s.validate().is_err(), "16 heads cannot split 12 columns");
    }
}
