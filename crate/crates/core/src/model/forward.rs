use super::params::InputLayout;
use super::{HnnsaeModel, NUM_TOKENS};
use crate::data::{EncodedDataset, NUM_CATEGORICAL, NUM_NUMERIC};
use crate::numcore::{Graph, Tensor, Var};
use crate::{Error, Result};

/// Column-major view of a dataset, laid out for one full-batch forward pass.
#[derive(Debug, Clone)]
pub struct Batch {
    len: usize,
    categorical: Vec<Vec<usize>>,
    numeric: Vec<Tensor>,
    one_hot: Option<Tensor>,
}

impl Batch {
    pub fn from_dataset(ds: &EncodedDataset, with_one_hot: bool) -> Result<Batch> {
        if ds.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let n = ds.len();
        let categorical = (0..NUM_CATEGORICAL)
            .map(|j| ds.categorical().iter().map(|r| r[j]).collect())
            .collect();
        let numeric = (0..NUM_NUMERIC)
            .map(|j| Tensor::new(vec![n, 1], ds.numeric().iter().map(|r| r[j]).collect()))
            .collect::<Result<_>>()?;
        let one_hot = if with_one_hot {
            let rows = ds.one_hot_rows();
            Some(Tensor::new(vec![n, ds.meta().one_hot_width()], rows.concat())?)
        } else {
            None
        };
        Ok(Batch {
            len: n,
            categorical,
            numeric,
            one_hot,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Projection weights of one attention head.
#[derive(Debug, Clone, Copy)]
pub struct HeadVars {
    pub query: Var,
    pub key: Var,
    pub value: Var,
}

/// Nodes of one forward pass that callers may want to inspect.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `[B×T×d]`
    pub tokens: Var,
    /// One `[B×T×T]` weight tensor per head; rows sum to one.
    pub attention: Vec<Var>,
    /// Extractor output before flattening, `[B×T×d]`.
    pub extracted: Var,
    /// `[B×(T·d)]`
    pub features: Var,
    /// `[B×1]`
    pub logits: Var,
}

/// Scaled dot-product attention for one head over `tokens[B×T×d]`.
/// Returns `(softmax(QKᵀ/√d_k)·V, weights)`.
pub fn attention_head(g: &mut Graph, tokens: Var, head: HeadVars) -> Result<(Var, Var)> {
    let q = g.matmul(tokens, head.query)?;
    let k = g.matmul(tokens, head.key)?;
    let v = g.matmul(tokens, head.value)?;
    let dk = g.value(q).last_dim() as f64;
    let scores = g.batched_matmul_nt(q, k, 1.0 / dk.sqrt())?;
    let weights = g.softmax_rows(scores)?;
    let out = g.batched_matmul(weights, v)?;
    Ok((out, weights))
}

/// Concatenates every head's output along the width and projects with `out_proj`.
pub fn multi_head(g: &mut Graph, tokens: Var, heads: &[HeadVars], out_proj: Var) -> Result<(Var, Vec<Var>)> {
    let mut outs = Vec::with_capacity(heads.len());
    let mut weights = Vec::with_capacity(heads.len());
    for &h in heads {
        let (o, w) = attention_head(g, tokens, h)?;
        outs.push(o);
        weights.push(w);
    }
    let cat = g.concat_last(&outs)?;
    Ok((g.matmul(cat, out_proj)?, weights))
}

/// `y1 = x + MultiHead(x)`, `y2 = y1 + W2·relu(W1·y1 + b1) + b2` per token.
/// `ffn = [w1, b1, w2, b2]`.
pub fn extractor(
    g: &mut Graph,
    tokens: Var,
    heads: &[HeadVars],
    out_proj: Var,
    ffn: [Var; 4],
) -> Result<(Var, Vec<Var>)> {
    let (mh, weights) = multi_head(g, tokens, heads, out_proj)?;
    let y1 = g.add(tokens, mh)?;
    let h = g.linear(y1, ffn[0], ffn[1])?;
    let h = g.relu(h);
    let f = g.linear(h, ffn[2], ffn[3])?;
    Ok((g.add(y1, f)?, weights))
}

/// Rectified affine layers followed by an affine output; returns the logit.
pub fn classifier(g: &mut Graph, features: Var, layers: &[(Var, Var)]) -> Result<Var> {
    let mut x = features;
    for (i, &(w, b)) in layers.iter().enumerate() {
        x = g.linear(x, w, b)?;
        if i + 1 < layers.len() {
            x = g.relu(x);
        }
    }
    Ok(x)
}

impl HnnsaeModel {
    pub(crate) fn check_levels(&self, ds: &EncodedDataset) -> Result<()> {
        if ds.meta().levels != self.levels {
            return Err(Error::Contract(
                "dataset categorical levels differ from the ones the model was built with".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn batch(&self, ds: &EncodedDataset) -> Result<Batch> {
        self.check_levels(ds)?;
        Batch::from_dataset(ds, !self.config.use_entity_embedding)
    }

    fn token_layer(&self, g: &mut Graph, vars: &[Var], batch: &Batch) -> Result<Var> {
        let d = self.config.d_model;
        match &self.layout.input {
            InputLayout::Embedding {
                tables,
                numeric_w,
                numeric_b,
            } => {
                let mut parts = Vec::with_capacity(NUM_TOKENS);
                for j in 0..NUM_CATEGORICAL {
                    parts.push(g.gather_rows(vars[tables[j]], &batch.categorical[j])?);
                }
                for j in 0..NUM_NUMERIC {
                    let x = g.constant(batch.numeric[j].clone());
                    parts.push(g.linear(x, vars[numeric_w[j]], vars[numeric_b[j]])?);
                }
                g.stack_rows(&parts)
            }
            InputLayout::Dense { w, b } => {
                let x = batch
                    .one_hot
                    .clone()
                    .ok_or_else(|| Error::Contract("dense input layer needs one-hot rows".into()))?;
                let x = g.constant(x);
                let t = g.linear(x, vars[*w], vars[*b])?;
                g.reshape(t, &[batch.len, NUM_TOKENS, d])
            }
        }
    }

    fn head_vars(&self, vars: &[Var]) -> Vec<HeadVars> {
        self.layout
            .heads
            .iter()
            .map(|&[q, k, v]| HeadVars {
                query: vars[q],
                key: vars[k],
                value: vars[v],
            })
            .collect()
    }

    /// Records the whole network for `batch`. `vars` come from
    /// [`HnnsaeModel::register`] on the same graph.
    pub fn forward(&self, g: &mut Graph, vars: &[Var], batch: &Batch) -> Result<ForwardPass> {
        let tokens = self.token_layer(g, vars, batch)?;
        let heads = self.head_vars(vars);
        let ffn = self.layout.ffn.map(|i| vars[i]);
        let (extracted, attention) = extractor(g, tokens, &heads, vars[self.layout.out_proj], ffn)?;
        let features = g.reshape(extracted, &[batch.len, NUM_TOKENS * self.config.d_model])?;
        let layers: Vec<(Var, Var)> = self.layout.mlp.iter().map(|&(w, b)| (vars[w], vars[b])).collect();
        let logits = classifier(g, features, &layers)?;
        Ok(ForwardPass {
            tokens,
            attention,
            extracted,
            features,
            logits,
        })
    }

    fn single_row(&self, categorical: [usize; NUM_CATEGORICAL], numeric: [f64; NUM_NUMERIC]) -> Result<Batch> {
        let card: Vec<usize> = self.levels.iter().map(Vec::len).collect();
        for j in 0..NUM_CATEGORICAL {
            if categorical[j] >= card[j] {
                return Err(Error::InvalidArgument(format!(
                    "categorical {j}: index {} out of bounds for {} levels",
                    categorical[j], card[j]
                )));
            }
        }
        let ds = EncodedDataset::new(
            vec![categorical],
            vec![numeric],
            vec![0],
            crate::data::EncoderMeta {
                levels: self.levels.clone(),
                scaler: None,
            },
        )?;
        Batch::from_dataset(&ds, !self.config.use_entity_embedding)
    }

    /// Token matrix `[10×d_model]` for one encoded row.
    pub fn tokenize(&self, categorical: [usize; NUM_CATEGORICAL], numeric: [f64; NUM_NUMERIC]) -> Result<Tensor> {
        let batch = self.single_row(categorical, numeric)?;
        let mut g = Graph::new();
        let vars = self.register(&mut g, false);
        let t = self.token_layer(&mut g, &vars, &batch)?;
        g.value(t).reshaped(vec![NUM_TOKENS, self.config.d_model])
    }

    /// Extractor output for one token matrix, flattened row-major to `[10·d_model]`.
    pub fn extract(&self, tokens: &Tensor) -> Result<Tensor> {
        let d = self.config.d_model;
        if tokens.shape() != [NUM_TOKENS, d] {
            return Err(Error::Shape {
                op: "extract",
                left: tokens.shape().to_vec(),
                right: vec![NUM_TOKENS, d],
            });
        }
        let mut g = Graph::new();
        let vars = self.register(&mut g, false);
        let t = g.constant(tokens.reshaped(vec![1, NUM_TOKENS, d])?);
        let heads = self.head_vars(&vars);
        let ffn = self.layout.ffn.map(|i| vars[i]);
        let (y, _) = extractor(&mut g, t, &heads, vars[self.layout.out_proj], ffn)?;
        g.value(y).reshaped(vec![NUM_TOKENS * d])
    }

    /// Churn probability for one flattened feature vector.
    pub fn classify(&self, features: &Tensor) -> Result<f64> {
        let width = NUM_TOKENS * self.config.d_model;
        if features.len() != width {
            return Err(Error::Shape {
                op: "classify",
                left: features.shape().to_vec(),
                right: vec![width],
            });
        }
        let mut g = Graph::new();
        let vars = self.register(&mut g, false);
        let x = g.constant(features.reshaped(vec![1, width])?);
        let layers: Vec<(Var, Var)> = self.layout.mlp.iter().map(|&(w, b)| (vars[w], vars[b])).collect();
        let z = classifier(&mut g, x, &layers)?;
        let p = g.sigmoid(z);
        Ok(g.value(p).data()[0])
    }
}
