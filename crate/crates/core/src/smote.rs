//! SMOTE oversampling of the minority class.
//!
//! Each synthetic row interpolates the numerics of a minority parent toward one
//! of its `k` nearest minority neighbours (Euclidean over the standardized
//! numerics). Categorical indices are copied whole from whichever end of the
//! segment the sample landed nearer to.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{EncodedDataset, NUM_NUMERIC};
use crate::numcore::seeded_rng;
use crate::par::{self, Parallelism};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
    #[serde(default)]
    pub parallelism: Parallelism,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            seed: 0,
            parallelism: Parallelism::default(),
        }
    }
}

/// Where a synthetic row came from. Indices refer to rows of the input dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub parent: usize,
    pub neighbor: usize,
    pub u: f64,
}

/// Appends synthetic minority rows until both classes have the same count.
pub fn oversample(train: &EncodedDataset, cfg: &SmoteConfig) -> Result<EncodedDataset> {
    oversample_with_origins(train, cfg).map(|(ds, _)| ds)
}

/// [`oversample`], also returning the origin of each appended row in order.
pub fn oversample_with_origins(
    train: &EncodedDataset,
    cfg: &SmoteConfig,
) -> Result<(EncodedDataset, Vec<SyntheticOrigin>)> {
    let (zeros, ones) = train.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(Error::InvalidArgument("SMOTE needs both classes present".into()));
    }
    let minority_label = if ones <= zeros { 1u8 } else { 0u8 };
    let minority: Vec<usize> = (0..train.len()).filter(|&i| train.labels()[i] == minority_label).collect();
    let k = cfg.k_neighbors;
    if k == 0 || k >= minority.len() {
        return Err(Error::InvalidArgument(format!(
            "k_neighbors = {k} must be in 1..{} (minority count)",
            minority.len()
        )));
    }
    let needed = zeros.max(ones) - zeros.min(ones);
    if needed == 0 {
        return Ok((train.clone(), Vec::new()));
    }

    let num = train.numeric();
    let neighbours = nearest_neighbours(cfg.parallelism, num, &minority, k);

    let mut rng = seeded_rng(cfg.seed);
    let mut cats = Vec::with_capacity(needed);
    let mut nums = Vec::with_capacity(needed);
    let mut origins = Vec::with_capacity(needed);
    for s in 0..needed {
        let p = s % minority.len();
        let parent = minority[p];
        let neighbor = neighbours[p][rng.random_range(0..k)];
        let u: f64 = rng.random_range(0.0..=1.0);
        let (x, y) = (&num[parent], &num[neighbor]);
        nums.push(std::array::from_fn(|j| x[j] + u * (y[j] - x[j])));
        cats.push(if u < 0.5 {
            train.categorical()[parent]
        } else {
            train.categorical()[neighbor]
        });
        origins.push(SyntheticOrigin { parent, neighbor, u });
    }
    let labels = vec![minority_label; needed];
    Ok((train.extended(cats, nums, labels), origins))
}

fn squared_distance(a: &[f64; NUM_NUMERIC], b: &[f64; NUM_NUMERIC]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// For every minority row, the dataset indices of its `k` nearest other
/// minority rows, closest first, ties broken by index.
fn nearest_neighbours(par: Parallelism, num: &[[f64; NUM_NUMERIC]], minority: &[usize], k: usize) -> Vec<Vec<usize>> {
    par::map_indices(par, minority.len(), |p| {
        let me = &num[minority[p]];
        let mut cand: Vec<(f64, usize)> = minority
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != p)
            .map(|(_, &i)| (squared_distance(me, &num[i]), i))
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(k - 1, by);
        cand.truncate(k);
        cand.sort_by(by);
        cand.into_iter().map(|(_, i)| i).collect()
    })
}
