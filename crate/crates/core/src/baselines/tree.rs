use serde::{Deserialize, Serialize};

use crate::data::{EncodedDataset, NUM_CATEGORICAL, NUM_FEATURES};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Fraction of churners among the training rows in this leaf.
        probability: f64,
        rows: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier with Gini impurity. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

/// Level indices as ordinal values, then the numerics.
fn features(ds: &EncodedDataset) -> Vec<[f64; NUM_FEATURES]> {
    ds.categorical()
        .iter()
        .zip(ds.numeric())
        .map(|(c, n)| {
            let mut x = [0.0; NUM_FEATURES];
            for j in 0..NUM_CATEGORICAL {
                x[j] = c[j] as f64;
            }
            x[NUM_CATEGORICAL..].copy_from_slice(n);
            x
        })
        .collect()
}

fn gini(pos: usize, n: usize) -> f64 {
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [[f64; NUM_FEATURES]],
    y: &'a [u8],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    /// Best split as `(feature, threshold, left rows)`. Ties keep the lower
    /// feature, then the lower threshold.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64, Vec<usize>, Vec<usize>)> {
        let n = rows.len();
        let pos: usize = rows.iter().map(|&r| self.y[r] as usize).sum();
        let parent = gini(pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.to_vec();
        for f in 0..NUM_FEATURES {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0;
            for i in 1..n {
                left_pos += self.y[sorted[i - 1]] as usize;
                let (lo, hi) = (self.x[sorted[i - 1]][f], self.x[sorted[i]][f]);
                if i < self.min_leaf || n - i < self.min_leaf || lo == hi {
                    continue;
                }
                let weighted = (i as f64 * gini(left_pos, i) + (n - i) as f64 * gini(pos - left_pos, n - i)) / n as f64;
                let gain = parent - weighted;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| {
            let (l, r) = rows.iter().partition(|&&r| self.x[r][f] <= t);
            (f, t, l, r)
        })
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let pos: usize = rows.iter().map(|&r| self.y[r] as usize).sum();
        self.nodes.push(TreeNode::Leaf {
            probability: pos as f64 / rows.len() as f64,
            rows: rows.len(),
        });
        if depth >= self.max_depth || pos == 0 || pos == rows.len() || rows.len() < 2 * self.min_leaf {
            return id;
        }
        if let Some((feature, threshold, l, r)) = self.best_split(&rows) {
            let left = self.grow(l, depth + 1);
            let right = self.grow(r, depth + 1);
            self.nodes[id] = TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        id
    }
}

impl DecisionTree {
    pub fn fit(ds: &EncodedDataset, max_depth: usize, min_leaf: usize) -> Result<DecisionTree> {
        if ds.is_empty() || min_leaf == 0 {
            return Err(Error::InvalidArgument("tree needs rows and a positive min_leaf".into()));
        }
        let x = features(ds);
        let mut b = Builder {
            x: &x,
            y: ds.labels(),
            max_depth,
            min_leaf,
            nodes: Vec::new(),
        };
        b.grow((0..ds.len()).collect(), 0);
        Ok(DecisionTree { nodes: b.nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + rec(nodes, left).max(rec(nodes, right)),
            }
        }
        rec(&self.nodes, 0)
    }

    pub fn predict_row(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { probability, .. } => return probability,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, ds: &EncodedDataset) -> Vec<f64> {
        features(ds).iter().map(|x| self.predict_row(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{meta, separable};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_split_on_a_threshold() {
        let ds = separable(40);
        let t = DecisionTree::fit(&ds, 8, 5).unwrap();
        assert_eq!(t.depth(), 1);
        match t.nodes()[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, NUM_CATEGORICAL + 1);
                assert!(threshold.abs() < 0.1);
            }
            _ => panic!("root should split"),
        }
    }

    #[test]
    fn respects_depth_and_leaf_size() {
        let ds = separable(200);
        let labels: Vec<u8> = (0..200).map(|i| u8::from((i * 37) % 5 < 2)).collect();
        let noisy = EncodedDataset::new(ds.categorical().to_vec(), ds.numeric().to_vec(), labels, meta()).unwrap();
        let t = DecisionTree::fit(&noisy, 3, 10).unwrap();
        assert!(t.depth() <= 3);
        for n in t.nodes() {
            if let TreeNode::Leaf { rows, .. } = n {
                assert!(*rows >= 10);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn predictions_invariant_under_monotone_numeric_transform(seed in 0u64..1000, a in 0.5f64..3.0) {
            let n = 80;
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            let mut s = seed;
            for _ in 0..n {
                let mut r = [0.0; 5];
                for v in &mut r {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    *v = ((s >> 33) as f64 / (1u64 << 31) as f64) * 2.0 - 1.0;
                }
                labels.push(u8::from(r[0] + 0.3 * r[1] > 0.0));
                rows.push(r);
            }
            if labels.iter().all(|&l| l == labels[0]) { return Ok(()); }
            let cat = vec![[0, 1, 2, 0, 1]; n];
            let base = EncodedDataset::new(cat.clone(), rows.clone(), labels.clone(), meta()).unwrap();
            let moved: Vec<[f64; 5]> = rows.iter().map(|r| r.map(|v| (a * v).exp())).collect();
            let moved = EncodedDataset::new(cat, moved, labels, meta()).unwrap();
            let p = DecisionTree::fit(&base, 8, 3).unwrap().predict(&base);
            let q = DecisionTree::fit(&moved, 8, 3).unwrap().predict(&moved);
            prop_assert_eq!(p, q);
        }
    }
}
