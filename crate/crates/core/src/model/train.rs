use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{HnnsaeModel, ModelConfig};
use crate::baselines::BaselineConfig;
use crate::data::EncodedDataset;
use crate::metrics::{auc_score, rod, roin};
use crate::numcore::{Adam, Graph};
use crate::{Error, Parallelism, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    /// Summed binary cross-entropy over the training rows at this epoch.
    pub train_loss: f64,
    pub test_auc: f64,
}

/// What produced a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum RunConfig {
    Hnnsae(ModelConfig),
    Baseline(BaselineConfig),
}

/// Time series and outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub checkpoints: Vec<Checkpoint>,
    pub final_test_auc: f64,
    pub final_train_loss: Option<f64>,
    /// Parameter digest of the final model (empty for models without one).
    pub digest: String,
    /// Not part of the reproducible content of a record.
    pub wall_time_secs: f64,
}

impl RunRecord {
    pub fn at_epoch(&self, epoch: usize) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.epoch == epoch)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        RunRecord {
            wall_time_secs: 0.0,
            ..self.clone()
        } == RunRecord {
            wall_time_secs: 0.0,
            ..other.clone()
        }
    }

    fn pair(&self, early: usize, late: usize) -> Result<(&Checkpoint, &Checkpoint)> {
        let get = |e| {
            self.at_epoch(e)
                .ok_or_else(|| Error::InvalidArgument(format!("run has no checkpoint at epoch {e}")))
        };
        Ok((get(early)?, get(late)?))
    }

    /// Relative train-loss decrease between two checkpoint epochs.
    pub fn rod(&self, early: usize, late: usize) -> Result<f64> {
        let (a, b) = self.pair(early, late)?;
        rod(a.train_loss, b.train_loss)
    }

    /// Relative test-AUC increase between two checkpoint epochs.
    pub fn roin(&self, early: usize, late: usize) -> Result<f64> {
        let (a, b) = self.pair(early, late)?;
        roin(a.test_auc, b.test_auc)
    }
}

pub fn train(train: &EncodedDataset, test: &EncodedDataset, cfg: &ModelConfig) -> Result<(HnnsaeModel, RunRecord)> {
    train_with(train, test, cfg, Parallelism::default())
}

/// Full-batch Adam on the summed cross-entropy of `train`, evaluating test AUC
/// every `record_every` epochs. The recorded loss is the one computed by that
/// epoch's forward pass; the AUC uses the parameters after its update.
pub fn train_with(
    train: &EncodedDataset,
    test: &EncodedDataset,
    cfg: &ModelConfig,
    par: Parallelism,
) -> Result<(HnnsaeModel, RunRecord)> {
    let started = Instant::now();
    if !train.meta().same_levels(test.meta()) {
        return Err(Error::Contract("train and test use different encodings".into()));
    }
    let mut model = HnnsaeModel::init(cfg, train.meta())?;
    let batch = model.batch(train)?;
    let labels = train.labels_f64();
    let mut adam = Adam::new(cfg.adam(), &model.params.tensors)?;
    let mut checkpoints = Vec::with_capacity(cfg.epochs / cfg.record_every);

    for epoch in 1..=cfg.epochs {
        let mut g = Graph::with_parallelism(par);
        let vars = model.register(&mut g, true);
        let fwd = model.forward(&mut g, &vars, &batch)?;
        let loss = g.bce_with_logits_sum(fwd.logits, &labels)?;
        let loss_value = g.value(loss).data()[0];
        if !loss_value.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: loss_value,
            });
        }
        g.backward(loss)?;
        let mut grads: Vec<Option<Vec<f64>>> = vars.iter().map(|&v| g.take_grad(v)).collect();
        drop(g);
        adam.step(&mut model.params.tensors, &mut grads)?;

        if epoch % cfg.record_every == 0 {
            let scores = predict_with(&model, test, par)?;
            let test_auc = auc_score(&scores, test.labels())?;
            log::debug!("epoch {epoch}: loss {loss_value:.4}, test AUC {test_auc:.4}");
            checkpoints.push(Checkpoint {
                epoch,
                train_loss: loss_value,
                test_auc,
            });
        }
    }
    let last = *checkpoints.last().expect("epochs >= record_every");
    let record = RunRecord {
        config: RunConfig::Hnnsae(cfg.clone()),
        checkpoints,
        final_test_auc: last.test_auc,
        final_train_loss: Some(last.train_loss),
        digest: model.digest(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, record))
}

pub fn predict(model: &HnnsaeModel, ds: &EncodedDataset) -> Result<Vec<f64>> {
    predict_with(model, ds, Parallelism::default())
}

/// Churn probability per row. Rows are scored independently, so the result
/// does not depend on row order or batch composition.
pub fn predict_with(model: &HnnsaeModel, ds: &EncodedDataset, par: Parallelism) -> Result<Vec<f64>> {
    let batch = model.batch(ds)?;
    let mut g = Graph::with_parallelism(par);
    let vars = model.register(&mut g, false);
    let fwd = model.forward(&mut g, &vars, &batch)?;
    let p = g.sigmoid(fwd.logits);
    Ok(g.value(p).data().to_vec())
}
