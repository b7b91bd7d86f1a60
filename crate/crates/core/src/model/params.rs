use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelConfig, NUM_TOKENS};
use crate::data::{EncoderMeta, CATEGORICAL, NUMERIC, NUM_CATEGORICAL, NUM_NUMERIC};
use crate::numcore::{derive_seed, glorot_uniform, seeded_rng, uniform, Graph, Tensor, Var};
use crate::{Error, Result};

/// Named trainable tensors in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
}

impl ParamSet {
    fn push(&mut self, name: String, t: Tensor) -> usize {
        self.names.push(name);
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(move |i| &mut self.tensors[i])
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// SHA-256 over names, shapes and little-endian IEEE-754 values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, t) in self.names.iter().zip(&self.tensors) {
            h.update(name.as_bytes());
            for &d in t.shape() {
                h.update((d as u64).to_le_bytes());
            }
            for &v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum InputLayout {
    Embedding {
        tables: [usize; NUM_CATEGORICAL],
        numeric_w: [usize; NUM_NUMERIC],
        numeric_b: [usize; NUM_NUMERIC],
    },
    /// One affine map from the one-hot + numeric row to all tokens.
    Dense { w: usize, b: usize },
}

/// Parameter indices by role.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub input: InputLayout,
    pub heads: Vec<[usize; 3]>,
    pub out_proj: usize,
    pub ffn: [usize; 4],
    pub mlp: Vec<(usize, usize)>,
}

/// Learned state of the network plus what it needs to interpret rows.
#[derive(Debug, Clone, PartialEq)]
pub struct HnnsaeModel {
    pub(crate) config: ModelConfig,
    pub(crate) levels: Vec<Vec<String>>,
    pub(crate) params: ParamSet,
    pub(crate) layout: Layout,
}

fn build(config: &ModelConfig, levels: &[Vec<String>], mut rng: Option<&mut crate::numcore::SeedRng>) -> (ParamSet, Layout) {
    let d = config.d_model;
    let dk = config.head_dim();
    let mut ps = ParamSet {
        names: Vec::new(),
        tensors: Vec::new(),
    };
    let weight = |ps: &mut ParamSet, rng: &mut Option<&mut crate::numcore::SeedRng>, name: String, fan_in: usize, fan_out: usize| {
        let t = match rng {
            Some(r) => glorot_uniform(r, fan_in, fan_out, &[fan_in, fan_out]),
            None => Tensor::zeros(&[fan_in, fan_out]),
        };
        ps.push(name, t)
    };
    let bias = |ps: &mut ParamSet, name: String, n: usize| ps.push(name, Tensor::zeros(&[n]));

    let input = if config.use_entity_embedding {
        let tables = std::array::from_fn(|j| {
            let shape = [levels[j].len(), d];
            let t = match rng.as_deref_mut() {
                Some(r) => uniform(r, config.embedding_init, &shape),
                None => Tensor::zeros(&shape),
            };
            ps.push(format!("embed.{}", CATEGORICAL[j]), t)
        });
        let mut numeric_w = [0; NUM_NUMERIC];
        let mut numeric_b = [0; NUM_NUMERIC];
        for j in 0..NUM_NUMERIC {
            numeric_w[j] = weight(&mut ps, &mut rng, format!("numeric.{}.w", NUMERIC[j]), 1, d);
            numeric_b[j] = bias(&mut ps, format!("numeric.{}.b", NUMERIC[j]), d);
        }
        InputLayout::Embedding {
            tables,
            numeric_w,
            numeric_b,
        }
    } else {
        let width = levels.iter().map(Vec::len).sum::<usize>() + NUM_NUMERIC;
        let w = weight(&mut ps, &mut rng, "input.w".into(), width, NUM_TOKENS * d);
        let b = bias(&mut ps, "input.b".into(), NUM_TOKENS * d);
        InputLayout::Dense { w, b }
    };

    let heads = (0..config.heads)
        .map(|h| {
            ["q", "k", "v"].map(|p| weight(&mut ps, &mut rng, format!("attn.head{h}.{p}"), d, dk))
        })
        .collect();
    let out_proj = weight(&mut ps, &mut rng, "attn.out".into(), dk * config.heads, d);
    let ffn = [
        weight(&mut ps, &mut rng, "ffn.w1".into(), d, config.ffn_width),
        bias(&mut ps, "ffn.b1".into(), config.ffn_width),
        weight(&mut ps, &mut rng, "ffn.w2".into(), config.ffn_width, d),
        bias(&mut ps, "ffn.b2".into(), d),
    ];
    let mut widths = vec![NUM_TOKENS * d];
    widths.extend(&config.mlp_hidden);
    widths.push(1);
    let mlp = widths
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            (
                weight(&mut ps, &mut rng, format!("mlp.{l}.w"), w[0], w[1]),
                bias(&mut ps, format!("mlp.{l}.b"), w[1]),
            )
        })
        .collect();
    (
        ps,
        Layout {
            input,
            heads,
            out_proj,
            ffn,
            mlp,
        },
    )
}

impl HnnsaeModel {
    /// Fresh parameters: Glorot-uniform weights, uniform embeddings, zero biases.
    pub fn init(config: &ModelConfig, meta: &EncoderMeta) -> Result<Self> {
        config.validate()?;
        if meta.levels.len() != NUM_CATEGORICAL {
            return Err(Error::InvalidArgument("encoder metadata has the wrong feature count".into()));
        }
        let mut rng = seeded_rng(derive_seed(config.seed, 0x1417));
        let (params, layout) = build(config, &meta.levels, Some(&mut rng));
        Ok(HnnsaeModel {
            config: config.clone(),
            levels: meta.levels.clone(),
            params,
            layout,
        })
    }

    /// Reassembles a model from stored parameters, checking names and shapes.
    pub fn from_parts(config: ModelConfig, levels: Vec<Vec<String>>, params: ParamSet) -> Result<Self> {
        config.validate()?;
        if levels.len() != NUM_CATEGORICAL {
            return Err(Error::InvalidArgument("checkpoint has the wrong categorical feature count".into()));
        }
        let (expect, layout) = build(&config, &levels, None);
        if expect.names != params.names {
            return Err(Error::InvalidArgument("parameter names do not match the configuration".into()));
        }
        for ((name, e), p) in expect.names.iter().zip(&expect.tensors).zip(&params.tensors) {
            if e.shape() != p.shape() {
                return Err(Error::InvalidArgument(format!(
                    "{name}: expected shape {:?}, found {:?}",
                    e.shape(),
                    p.shape()
                )));
            }
        }
        Ok(HnnsaeModel {
            config,
            levels,
            params,
            layout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn levels(&self) -> &[Vec<String>] {
        &self.levels
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn digest(&self) -> String {
        self.params.digest()
    }

    /// Copies every parameter onto `g`, as trainable leaves or constants.
    pub fn register(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.params
            .tensors
            .iter()
            .map(|t| if trainable { g.param(t.clone()) } else { g.constant(t.clone()) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> EncoderMeta {
        EncoderMeta {
            levels: vec![
                vec!["France".into(), "Germany".into(), "Spain".into()],
                vec!["Female".into(), "Male".into()],
                vec!["1".into(), "2".into(), "3".into(), "4".into()],
                vec!["0".into(), "1".into()],
                vec!["0".into(), "1".into()],
            ],
            scaler: None,
        }
    }

    #[test]
    fn shapes_follow_config() {
        let cfg = ModelConfig::default();
        let m = HnnsaeModel::init(&cfg, &meta()).unwrap();
        let p = m.params();
        assert_eq!(p.get("embed.Geography").unwrap().shape(), &[3, 16]);
        assert_eq!(p.get("numeric.Age.w").unwrap().shape(), &[1, 16]);
        assert_eq!(p.get("attn.head7.q").unwrap().shape(), &[16, 2]);
        assert_eq!(p.get("attn.out").unwrap().shape(), &[16, 16]);
        assert_eq!(p.get("ffn.w1").unwrap().shape(), &[16, 64]);
        assert_eq!(p.get("mlp.0.w").unwrap().shape(), &[160, 128]);
        assert_eq!(p.get("mlp.3.w").unwrap().shape(), &[32, 1]);
        assert!(p.get("mlp.3.b").unwrap().data().iter().all(|&b| b == 0.0));
        let a = (6.0f64 / (160.0 + 128.0)).sqrt();
        assert!(p.get("mlp.0.w").unwrap().data().iter().all(|w| w.abs() <= a));
        assert!(p.get("embed.Gender").unwrap().data().iter().all(|w| w.abs() <= 0.05));
    }

    #[test]
    fn dense_input_when_embedding_disabled() {
        let cfg = ModelConfig {
            use_entity_embedding: false,
            ..ModelConfig::default()
        };
        let m = HnnsaeModel::init(&cfg, &meta()).unwrap();
        assert_eq!(m.params().get("input.w").unwrap().shape(), &[13 + 5, 160]);
        assert!(m.params().get("embed.Geography").is_none());
    }

    #[test]
    fn init_is_seeded() {
        let cfg = ModelConfig::default();
        let a = HnnsaeModel::init(&cfg, &meta()).unwrap();
        let b = HnnsaeModel::init(&cfg, &meta()).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = HnnsaeModel::init(&ModelConfig { seed: 1, ..cfg }, &meta()).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn heads_must_divide_width() {
        let cfg = ModelConfig {
            heads: 3,
            ..ModelConfig::default()
        };
        assert!(HnnsaeModel::init(&cfg, &meta()).is_err());
    }
}
