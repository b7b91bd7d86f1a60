use super::{BaselineConfig, BaselineKind};
use crate::data::EncodedDataset;
use crate::metrics::auc_score;
use crate::model::{classifier, Checkpoint, ParamSet};
use crate::numcore::{derive_seed, glorot_uniform, seeded_rng, Adam, AdamConfig, Graph, Tensor, Var};
use crate::{Error, Parallelism, Result};

/// Logistic regression (no hidden layer) or a ReLU MLP over one-hot rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralBaseline {
    params: ParamSet,
    width: usize,
}

fn design(ds: &EncodedDataset) -> Result<Tensor> {
    Tensor::new(vec![ds.len(), ds.meta().one_hot_width()], ds.one_hot_rows().concat())
}

impl NeuralBaseline {
    pub fn init(width: usize, hidden: &[usize], seed: u64) -> NeuralBaseline {
        let mut rng = seeded_rng(derive_seed(seed, 0xBA5E));
        let mut widths = vec![width];
        widths.extend(hidden);
        widths.push(1);
        let mut params = ParamSet {
            names: Vec::new(),
            tensors: Vec::new(),
        };
        for (l, w) in widths.windows(2).enumerate() {
            params.names.push(format!("layer.{l}.w"));
            params.tensors.push(glorot_uniform(&mut rng, w[0], w[1], &[w[0], w[1]]));
            params.names.push(format!("layer.{l}.b"));
            params.tensors.push(Tensor::zeros(&[w[1]]));
        }
        NeuralBaseline { params, width }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn logits(&self, g: &mut Graph, vars: &[Var], x: Tensor) -> Result<Var> {
        let x = g.constant(x);
        let layers: Vec<(Var, Var)> = vars.chunks(2).map(|p| (p[0], p[1])).collect();
        classifier(g, x, &layers)
    }

    pub fn fit(
        train: &EncodedDataset,
        test: &EncodedDataset,
        cfg: &BaselineConfig,
        par: Parallelism,
    ) -> Result<(NeuralBaseline, Vec<Checkpoint>)> {
        let hidden: &[usize] = if cfg.kind == BaselineKind::Mlp { &cfg.hidden } else { &[] };
        let mut model = NeuralBaseline::init(train.meta().one_hot_width(), hidden, cfg.seed);
        let x = design(train)?;
        let labels = train.labels_f64();
        let adam_cfg = AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(adam_cfg, &model.params.tensors)?;
        let mut checkpoints = Vec::new();
        for epoch in 1..=cfg.epochs {
            let mut g = Graph::with_parallelism(par);
            let vars: Vec<Var> = model.params.tensors.iter().map(|t| g.param(t.clone())).collect();
            let logits = model.logits(&mut g, &vars, x.clone())?;
            let loss = g.bce_with_logits_sum(logits, &labels)?;
            let loss_value = g.value(loss).data()[0];
            if !loss_value.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: loss_value,
                });
            }
            g.backward(loss)?;
            let mut grads: Vec<Option<Vec<f64>>> = vars.iter().map(|&v| g.take_grad(v)).collect();
            adam.step(&mut model.params.tensors, &mut grads)?;
            if epoch % cfg.record_every == 0 {
                let test_auc = auc_score(&model.predict(test, par)?, test.labels())?;
                checkpoints.push(Checkpoint {
                    epoch,
                    train_loss: loss_value,
                    test_auc,
                });
            }
        }
        Ok((model, checkpoints))
    }

    pub fn predict(&self, ds: &EncodedDataset, par: Parallelism) -> Result<Vec<f64>> {
        if ds.meta().one_hot_width() != self.width {
            return Err(Error::Contract("dataset encoding does not match the baseline".into()));
        }
        let mut g = Graph::with_parallelism(par);
        let vars: Vec<Var> = self.params.tensors.iter().map(|t| g.constant(t.clone())).collect();
        let logits = self.logits(&mut g, &vars, design(ds)?)?;
        let p = g.sigmoid(logits);
        Ok(g.value(p).data().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::separable;
    use super::*;

    #[test]
    fn zero_weights_score_one_half() {
        let ds = separable(10);
        let mut m = NeuralBaseline::init(ds.meta().one_hot_width(), &[], 3);
        for t in &mut m.params_mut().tensors {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let p = m.predict(&ds, Parallelism::Sequential).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn logistic_is_a_single_affine_map() {
        let m = NeuralBaseline::init(18, &[], 0);
        assert_eq!(m.params().len(), 2);
        assert_eq!(m.params().tensors[0].shape(), &[18, 1]);
        let mlp = NeuralBaseline::init(18, &[128, 64, 32], 0);
        let shapes: Vec<_> = mlp.params().tensors.iter().map(|t| t.shape().to_vec()).collect();
        assert_eq!(shapes[0], vec![18, 128]);
        assert_eq!(shapes[6], vec![32, 1]);
    }
}
