use rand::seq::SliceRandom;

use super::encode::Scaler;
use super::EncodedDataset;
use crate::numcore::seeded_rng;
use crate::{Error, Result};

/// Shuffles with `seed`, sends the first `floor(ratio * n)` rows to train and the
/// rest to test, then standardizes both partitions with statistics fitted on
/// the training rows.
pub fn split(ds: &EncodedDataset, ratio: f64, seed: u64) -> Result<(EncodedDataset, EncodedDataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    if ds.meta().scaler.is_some() {
        return Err(Error::Contract("split expects an unstandardized dataset".into()));
    }
    let n = ds.len();
    let n_train = (ratio * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "ratio {ratio} leaves an empty partition for {n} rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let train = ds.select(&order[..n_train]);
    let test = ds.select(&order[n_train..]);
    let scaler = Scaler::fit(train.numeric());
    Ok((train.standardized(scaler), test.standardized(scaler)))
}
