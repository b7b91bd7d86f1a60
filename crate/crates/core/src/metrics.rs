//! Rank-sum AUC and the relative change rates used to read training curves.

use crate::{Error, Result};

/// Scores with their binary labels and the rank statistics AUC needs.
///
/// `rank_sum` is the sum of the ascending (1-based) ranks of the positive
/// samples, with tied scores sharing the average of their ranks.
#[derive(Debug, Clone)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<u8>,
    positives: usize,
    negatives: usize,
    rank_sum: f64,
}

impl ScoredLabels {
    pub fn new(scores: &[f64], labels: &[u8]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::Numeric("NaN score".into()));
        }
        let positives = labels.iter().filter(|&&l| l == 1).count();
        let negatives = labels.len() - positives;
        if positives == 0 || negatives == 0 {
            return Err(Error::InvalidArgument(
                "AUC is undefined unless both classes are present".into(),
            ));
        }

        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let mut rank_sum = 0.0;
        let mut i = 0;
        while i < order.len() {
            let mut j = i + 1;
            while j < order.len() && scores[order[j]] == scores[order[i]] {
                j += 1;
            }
            // ranks i+1 ..= j share their mean
            let avg = (i + 1 + j) as f64 / 2.0;
            let pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
            rank_sum += avg * pos_in_group as f64;
            i = j;
        }

        Ok(ScoredLabels {
            scores: scores.to_vec(),
            labels: labels.to_vec(),
            positives,
            negatives,
            rank_sum,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn negatives(&self) -> usize {
        self.negatives
    }

    pub fn rank_sum(&self) -> f64 {
        self.rank_sum
    }
}

/// `(S - M(M+1)/2) / (M N)`: the Mann-Whitney form of the ROC area.
pub fn auc(sl: &ScoredLabels) -> f64 {
    let m = sl.positives as f64;
    let n = sl.negatives as f64;
    (sl.rank_sum - m * (m + 1.0) / 2.0) / (m * n)
}

pub fn auc_score(scores: &[f64], labels: &[u8]) -> Result<f64> {
    ScoredLabels::new(scores, labels).map(|sl| auc(&sl))
}

/// Rate of decrease of train loss between two checkpoints.
pub fn rod(loss_early: f64, loss_late: f64) -> Result<f64> {
    if !(loss_early > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ROD needs a positive earlier loss, got {loss_early}"
        )));
    }
    Ok((loss_early - loss_late) / loss_early)
}

/// Rate of increase of test AUC between two checkpoints.
pub fn roin(auc_early: f64, auc_late: f64) -> Result<f64> {
    if !(auc_early > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ROIn needs a positive earlier AUC, got {auc_early}"
        )));
    }
    Ok((auc_late - auc_early) / auc_early)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Fraction of positive/negative pairs ordered correctly, ties counting half.
    fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut good = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    good += 1.0;
                } else if scores[i] == scores[j] {
                    good += 0.5;
                }
            }
        }
        good / pairs
    }

    #[test]
    fn worked_examples() {
        let s = [0.9, 0.8, 0.3, 0.2];
        assert_eq!(auc_score(&s, &[1, 1, 0, 0]).unwrap(), 1.0);
        let sl = ScoredLabels::new(&s, &[1, 0, 1, 0]).unwrap();
        assert_eq!(sl.rank_sum(), 6.0);
        assert_eq!(auc(&sl), 0.75);
        assert_eq!(pair_count_auc(&s, &[1, 0, 1, 0]), 0.75);
        assert_eq!(auc_score(&[0.4; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(auc_score(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(auc_score(&[0.1, 0.2], &[0, 0]).is_err());
        assert!(auc_score(&[0.1], &[1, 0]).is_err());
        assert!(auc_score(&[f64::NAN, 0.2], &[1, 0]).is_err());
    }

    #[test]
    fn rate_examples() {
        assert!((rod(100.0, 40.0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(rod(3.5, 3.5).unwrap(), 0.0);
        assert_eq!(rod(50.0, 75.0).unwrap(), -0.5);
        assert!(rod(0.0, 1.0).is_err());
        assert!((roin(0.8, 0.88).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(roin(0.7, 0.7).unwrap(), 0.0);
        assert!(roin(-0.1, 0.5).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2usize..120).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..20, n).prop_map(|v| v.into_iter().map(|x| x as f64 / 4.0).collect()),
                prop::collection::vec(0u8..=1, n).prop_map(|mut l| {
                    // both classes always present
                    l[0] = 0;
                    l[1] = 1;
                    l
                }),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_pair_counting((scores, labels) in instance()) {
            let a = auc_score(&scores, &labels).unwrap();
            prop_assert!((a - pair_count_auc(&scores, &labels)).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_monotone_transform((scores, labels) in instance()) {
            let t: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert!((auc_score(&scores, &labels).unwrap() - auc_score(&t, &labels).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn label_flip_complements_without_ties() {
        let scores: Vec<f64> = (0..40).map(|i| ((i * 37) % 41) as f64).collect();
        let labels: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
        let total = auc_score(&scores, &labels).unwrap() + auc_score(&scores, &flipped).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
