use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RawTable, CATEGORICAL, NUMERIC, NUM_CATEGORICAL, NUM_NUMERIC};
use crate::{Error, Result};

pub const DATASET_FORMAT: &str = "hnnsae-encoded-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Per-column `(x - mean) / std` parameters fitted on a training partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: [f64; NUM_NUMERIC],
    pub stds: [f64; NUM_NUMERIC],
}

impl Scaler {
    /// Population statistics of `rows`; a zero-variance column keeps unit scale.
    pub fn fit(rows: &[[f64; NUM_NUMERIC]]) -> Scaler {
        let n = rows.len() as f64;
        let mut means = [0.0; NUM_NUMERIC];
        let mut stds = [0.0; NUM_NUMERIC];
        for j in 0..NUM_NUMERIC {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            means[j] = m;
            stds[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Scaler { means, stds }
    }

    pub fn apply(&self, row: &[f64; NUM_NUMERIC]) -> [f64; NUM_NUMERIC] {
        std::array::from_fn(|j| (row[j] - self.means[j]) / self.stds[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderMeta {
    /// Sorted distinct levels, one list per categorical feature.
    pub levels: Vec<Vec<String>>,
    /// Present once the dataset has been standardized.
    pub scaler: Option<Scaler>,
}

impl EncoderMeta {
    pub fn cardinalities(&self) -> [usize; NUM_CATEGORICAL] {
        std::array::from_fn(|j| self.levels[j].len())
    }

    /// Width of the one-hot categorical block plus the numerics.
    pub fn one_hot_width(&self) -> usize {
        self.cardinalities().iter().sum::<usize>() + NUM_NUMERIC
    }

    pub fn same_levels(&self, other: &EncoderMeta) -> bool {
        self.levels == other.levels
    }
}

/// Index-encoded features with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDataset {
    categorical: Vec<[usize; NUM_CATEGORICAL]>,
    numeric: Vec<[f64; NUM_NUMERIC]>,
    labels: Vec<u8>,
    meta: EncoderMeta,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    version: u32,
    categorical_features: Vec<String>,
    numeric_features: Vec<String>,
    dataset: EncodedDataset,
}

impl EncodedDataset {
    pub fn new(
        categorical: Vec<[usize; NUM_CATEGORICAL]>,
        numeric: Vec<[f64; NUM_NUMERIC]>,
        labels: Vec<u8>,
        meta: EncoderMeta,
    ) -> Result<Self> {
        if categorical.len() != numeric.len() || numeric.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "column lengths disagree: {} categorical, {} numeric, {} labels",
                categorical.len(),
                numeric.len(),
                labels.len()
            )));
        }
        if meta.levels.len() != NUM_CATEGORICAL || meta.levels.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument("encoder metadata needs a non-empty level list per categorical".into()));
        }
        let card = meta.cardinalities();
        for (r, row) in categorical.iter().enumerate() {
            for j in 0..NUM_CATEGORICAL {
                if row[j] >= card[j] {
                    return Err(Error::InvalidArgument(format!(
                        "row {r}: {} index {} exceeds {} levels",
                        CATEGORICAL[j], row[j], card[j]
                    )));
                }
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
        }
        if numeric.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite numeric feature".into()));
        }
        Ok(EncodedDataset {
            categorical,
            numeric,
            labels,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn categorical(&self) -> &[[usize; NUM_CATEGORICAL]] {
        &self.categorical
    }

    pub fn numeric(&self) -> &[[f64; NUM_NUMERIC]] {
        &self.numeric
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| l as f64).collect()
    }

    pub fn meta(&self) -> &EncoderMeta {
        &self.meta
    }

    /// `(count of label 0, count of label 1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        (self.len() - ones, ones)
    }

    pub fn level_name(&self, feature: usize, index: usize) -> Option<&str> {
        self.meta.levels.get(feature)?.get(index).map(String::as_str)
    }

    pub fn level_index(&self, feature: usize, level: &str) -> Option<usize> {
        self.meta.levels.get(feature)?.binary_search_by(|l| cmp_levels(l, level)).ok()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> EncodedDataset {
        EncodedDataset {
            categorical: indices.iter().map(|&i| self.categorical[i]).collect(),
            numeric: indices.iter().map(|&i| self.numeric[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Appends rows that share this dataset's encoding.
    pub(crate) fn extended(
        &self,
        categorical: Vec<[usize; NUM_CATEGORICAL]>,
        numeric: Vec<[f64; NUM_NUMERIC]>,
        labels: Vec<u8>,
    ) -> EncodedDataset {
        let mut out = self.clone();
        out.categorical.extend(categorical);
        out.numeric.extend(numeric);
        out.labels.extend(labels);
        out
    }

    pub(crate) fn standardized(&self, scaler: Scaler) -> EncodedDataset {
        EncodedDataset {
            categorical: self.categorical.clone(),
            numeric: self.numeric.iter().map(|r| scaler.apply(r)).collect(),
            labels: self.labels.clone(),
            meta: EncoderMeta {
                levels: self.meta.levels.clone(),
                scaler: Some(scaler),
            },
        }
    }

    /// Dense rows of one-hot categoricals followed by the numerics.
    pub fn one_hot_rows(&self) -> Vec<Vec<f64>> {
        let card = self.meta.cardinalities();
        let width = self.meta.one_hot_width();
        self.categorical
            .iter()
            .zip(&self.numeric)
            .map(|(cat, num)| {
                let mut row = vec![0.0; width];
                let mut offset = 0;
                for j in 0..NUM_CATEGORICAL {
                    row[offset + cat[j]] = 1.0;
                    offset += card[j];
                }
                row[offset..].copy_from_slice(num);
                row
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DatasetFile {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            categorical_features: CATEGORICAL.iter().map(|s| s.to_string()).collect(),
            numeric_features: NUMERIC.iter().map(|s| s.to_string()).collect(),
            dataset: self.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        if file.format != DATASET_FORMAT || file.version != DATASET_VERSION {
            return Err(Error::Serde(format!(
                "unsupported dataset file {} v{} (expected {DATASET_FORMAT} v{DATASET_VERSION})",
                file.format, file.version
            )));
        }
        let d = file.dataset;
        EncodedDataset::new(d.categorical, d.numeric, d.labels, d.meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = Error::read_input(path)?;
        EncodedDataset::from_json(&text)
    }
}

/// Integer-valued levels sort numerically, everything else lexically.
fn cmp_levels(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Drops the identifier columns and maps every categorical onto the index of
/// its value in the sorted distinct-level list. Numerics are kept raw.
pub fn prepare(raw: &RawTable) -> Result<EncodedDataset> {
    let cat_values = |r: &super::CustomerRecord| -> [String; NUM_CATEGORICAL] {
        [
            r.geography.clone(),
            r.gender.clone(),
            r.num_of_products.to_string(),
            r.has_cr_card.to_string(),
            r.is_active_member.to_string(),
        ]
    };
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); NUM_CATEGORICAL];
    let values: Vec<[String; NUM_CATEGORICAL]> = raw.rows.iter().map(cat_values).collect();
    for (j, lv) in levels.iter_mut().enumerate() {
        lv.extend(values.iter().map(|v| v[j].clone()));
        lv.sort_by(|a, b| cmp_levels(a, b));
        lv.dedup();
    }
    let categorical = values
        .iter()
        .map(|v| {
            std::array::from_fn(|j| {
                levels[j]
                    .binary_search_by(|l| cmp_levels(l, &v[j]))
                    .expect("level list built from these values")
            })
        })
        .collect();
    let numeric = raw.rows.iter().map(|r| r.numerics()).collect();
    let labels = raw.rows.iter().map(|r| r.exited).collect();
    EncodedDataset::new(categorical, numeric, labels, EncoderMeta { levels, scaler: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_csv;

    fn table() -> RawTable {
        let text = "RowNumber,CustomerId,Surname,CreditScore,Geography,Gender,Age,Tenure,Balance,NumOfProducts,HasCrCard,IsActiveMember,EstimatedSalary,Exited
1,1,A,600,Spain,Male,30,2,0,2,1,1,100.5,0
2,2,B,700,France,Female,40,3,1000,1,0,1,200.5,1
3,3,C,650,Germany,Male,50,4,2000,4,1,0,300.5,0
4,4,D,640,France,Female,35,5,0,10,1,0,400.5,1
";
        parse_csv(text.as_bytes()).unwrap()
    }

    #[test]
    fn levels_are_sorted_and_indexed() {
        let ds = prepare(&table()).unwrap();
        assert_eq!(ds.meta().levels[0], vec!["France", "Germany", "Spain"]);
        // numeric order, not lexical ("10" after "4")
        assert_eq!(ds.meta().levels[2], vec!["1", "2", "4", "10"]);
        assert_eq!(ds.categorical()[0][0], 2);
        assert_eq!(ds.categorical()[1][0], 0);
        assert_eq!(ds.numeric()[1], [700.0, 40.0, 3.0, 1000.0, 200.5]);
        assert_eq!(ds.labels(), &[0, 1, 0, 1]);
        assert_eq!(ds.categorical()[0].len() + ds.numeric()[0].len(), 10);
    }

    #[test]
    fn level_round_trip() {
        let ds = prepare(&table()).unwrap();
        for j in 0..NUM_CATEGORICAL {
            for i in 0..ds.meta().levels[j].len() {
                let name = ds.level_name(j, i).unwrap().to_string();
                assert_eq!(ds.level_index(j, &name), Some(i));
            }
        }
        assert_eq!(ds.level_index(0, "Atlantis"), None);
    }

    #[test]
    fn one_hot_rows_expand_indices() {
        let ds = prepare(&table()).unwrap();
        let rows = ds.one_hot_rows();
        assert_eq!(rows[0].len(), 3 + 2 + 4 + 2 + 2 + 5);
        assert_eq!(rows[0][..3], [0.0, 0.0, 1.0]);
        assert_eq!(rows[0].iter().take(13).sum::<f64>(), 5.0);
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let ds = prepare(&table()).unwrap();
        let back = EncodedDataset::from_json(&ds.to_json().unwrap()).unwrap();
        assert_eq!(back, ds);
        let tampered = ds.to_json().unwrap().replace("\"version\":1", "\"version\":99");
        assert!(EncodedDataset::from_json(&tampered).is_err());
    }

    #[test]
    fn constructor_rejects_out_of_range_index() {
        let ds = prepare(&table()).unwrap();
        let mut cat = ds.categorical().to_vec();
        cat[0][0] = 3;
        assert!(EncodedDataset::new(cat, ds.numeric().to_vec(), ds.labels().to_vec(), ds.meta().clone()).is_err());
    }
}
