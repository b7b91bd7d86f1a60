//! Reference classifiers compared against the attention model.
//!
//! Logistic regression and the MLP read the one-hot + standardized numeric
//! row and train with the same full-batch Adam and summed cross-entropy as the
//! main model. The decision tree reads raw level indices and numerics.

mod neural;
mod tree;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use neural::NeuralBaseline;
pub use tree::{DecisionTree, TreeNode};

use crate::data::EncodedDataset;
use crate::metrics::auc_score;
use crate::model::{RunConfig, RunRecord};
use crate::stats::{mean, one_tailed_welch, sample_std, Direction};
use crate::{Error, Parallelism, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Logistic,
    Mlp,
    Tree,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Logistic, BaselineKind::Mlp, BaselineKind::Tree];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Logistic => "logistic",
            BaselineKind::Mlp => "mlp",
            BaselineKind::Tree => "tree",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub record_every: usize,
    /// Hidden widths of the MLP; ignored by the other kinds.
    pub hidden: Vec<usize>,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
    pub use_smote: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            kind: BaselineKind::Logistic,
            epochs: 1000,
            learning_rate: 1e-3,
            record_every: 50,
            hidden: vec![128, 64, 32],
            max_depth: 8,
            min_leaf: 10,
            seed: 0,
            use_smote: true,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        match self.kind {
            BaselineKind::Tree => {
                if self.max_depth == 0 || self.min_leaf == 0 {
                    return bad("max_depth and min_leaf must be positive");
                }
            }
            _ => {
                if self.record_every == 0 || self.epochs < self.record_every {
                    return bad("record_every must be positive and at most epochs");
                }
                if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
                    return bad("learning_rate must be positive");
                }
                if self.kind == BaselineKind::Mlp && (self.hidden.is_empty() || self.hidden.contains(&0)) {
                    return bad("mlp hidden widths must be positive");
                }
            }
        }
        Ok(())
    }
}

/// A fitted baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    Neural(NeuralBaseline),
    Tree(DecisionTree),
}

impl Baseline {
    pub fn predict(&self, ds: &EncodedDataset, par: Parallelism) -> Result<Vec<f64>> {
        match self {
            Baseline::Neural(m) => m.predict(ds, par),
            Baseline::Tree(t) => Ok(t.predict(ds)),
        }
    }
}

pub fn fit_baseline(
    train: &EncodedDataset,
    test: &EncodedDataset,
    cfg: &BaselineConfig,
    par: Parallelism,
) -> Result<(Baseline, RunRecord)> {
    cfg.validate()?;
    if !train.meta().same_levels(test.meta()) {
        return Err(Error::Contract("train and test use different encodings".into()));
    }
    let started = Instant::now();
    let (model, checkpoints, digest) = match cfg.kind {
        BaselineKind::Tree => {
            let t = DecisionTree::fit(train, cfg.max_depth, cfg.min_leaf)?;
            (Baseline::Tree(t), Vec::new(), String::new())
        }
        _ => {
            let (m, cps) = NeuralBaseline::fit(train, test, cfg, par)?;
            let digest = m.params().digest();
            (Baseline::Neural(m), cps, digest)
        }
    };
    let final_test_auc = auc_score(&model.predict(test, par)?, test.labels())?;
    let record = RunRecord {
        config: RunConfig::Baseline(cfg.clone()),
        final_train_loss: checkpoints.last().map(|c| c.train_loss),
        checkpoints,
        final_test_auc,
        digest,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, record))
}

/// One-sided Welch comparison of per-run test AUCs, HNNSAE > baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub hnnsae_mean: f64,
    pub hnnsae_std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn compare_to_hnnsae(hnnsae: &[f64], baseline: &[f64]) -> Result<Comparison> {
    if hnnsae.len() < 2 || baseline.len() < 2 {
        return Err(Error::InvalidArgument("comparison needs at least two runs per model".into()));
    }
    let w = one_tailed_welch(hnnsae, baseline, Direction::Greater)?;
    Ok(Comparison {
        hnnsae_mean: mean(hnnsae),
        hnnsae_std: sample_std(hnnsae),
        baseline_mean: mean(baseline),
        baseline_std: sample_std(baseline),
        t: w.t,
        df: w.df,
        p: w.p,
    })
}


#[cfg(test)]
mod tests {
    use super::fixtures::separable;
    use super::*;

    #[test]
    fn every_kind_separates_a_separable_set() {
        let ds = separable(60);
        for kind in BaselineKind::ALL {
            let cfg = BaselineConfig {
                kind,
                epochs: 300,
                learning_rate: 1e-2,
                min_leaf: 2,
                ..BaselineConfig::default()
            };
            let (_, rec) = fit_baseline(&ds, &ds, &cfg, Parallelism::Sequential).unwrap();
            assert_eq!(rec.final_test_auc, 1.0, "{kind:?}");
        }
    }

    #[test]
    fn comparison_needs_two_runs() {
        assert!(compare_to_hnnsae(&[0.9], &[0.8, 0.81]).is_err());
        let c = compare_to_hnnsae(&[0.90, 0.91, 0.92], &[0.80, 0.82, 0.81]).unwrap();
        assert!(c.t > 0.0 && c.p < 0.01);
        assert!((c.hnnsae_mean - 0.91).abs() < 1e-12);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = BaselineConfig {
            kind: BaselineKind::Mlp,
            hidden: vec![],
            ..BaselineConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = BaselineConfig {
            kind: BaselineKind::Tree,
            max_depth: 0,
            ..BaselineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
