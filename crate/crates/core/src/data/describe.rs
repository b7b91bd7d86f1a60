use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Summary of one numeric column. Moment statistics are `None` when they are
/// undefined (zero variance, or too few rows for the bias adjustment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub std: f64,
    /// `std / mean`; `None` for a zero mean.
    pub cv: Option<f64>,
    pub kurtosis: Option<f64>,
    pub mean: f64,
    pub skewness: Option<f64>,
    /// Why the moment statistics are missing, when they are.
    pub moment_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub columns: Vec<ColumnStats>,
}

impl DescriptiveStats {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Plain-text table with columns Std, CV, Kurtosis, Mean, Skewness.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
        let mut out = format!(
            "{:<16} {:>14} {:>8} {:>9} {:>14} {:>9}\n",
            "Variable", "Std", "CV", "Kurtosis", "Mean", "Skewness"
        );
        for c in &self.columns {
            out.push_str(&format!(
                "{:<16} {:>14.3} {:>8} {:>9} {:>14.4} {:>9}\n",
                c.name,
                c.std,
                opt(c.cv),
                opt(c.kurtosis),
                c.mean,
                opt(c.skewness)
            ));
        }
        out
    }
}

/// Sample std (n-1), CV, bias-adjusted Fisher–Pearson skewness and
/// bias-adjusted excess kurtosis of one column.
pub fn describe_column(name: &str, xs: &[f64]) -> Result<ColumnStats> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "{name}: descriptive statistics need at least 3 rows, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let std = (m2 * nf / (nf - 1.0)).sqrt();
    let cv = (mean != 0.0).then(|| std / mean);

    let (mut skewness, mut kurtosis, mut moment_error) = (None, None, None);
    if m2 <= f64::EPSILON * mean.abs().max(1.0).powi(2) * 1e-6 {
        moment_error = Some(format!("{name}: zero variance, skewness and kurtosis undefined"));
    } else {
        let g1 = m3 / m2.powf(1.5);
        skewness = Some(g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0));
        if n >= 4 {
            let g2 = m4 / (m2 * m2) - 3.0;
            kurtosis = Some(((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)));
        } else {
            moment_error = Some(format!("{name}: kurtosis needs at least 4 rows"));
        }
    }
    Ok(ColumnStats {
        name: name.to_string(),
        std,
        cv,
        kurtosis,
        mean,
        skewness,
        moment_error,
    })
}

pub fn describe(columns: &[(&str, Vec<f64>)]) -> Result<DescriptiveStats> {
    Ok(DescriptiveStats {
        columns: columns
            .iter()
            .map(|(name, xs)| describe_column(name, xs))
            .collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_estimators() {
        // reference values from pandas Series.std/.skew/.kurt
        let xs = [2.0, 8.0, 0.0, 4.0, 1.0, 9.0, 9.0, 0.0, 3.5];
        let s = describe_column("x", &xs).unwrap();
        assert!((s.std - 3.7286428868661825).abs() < 1e-12);
        assert!((s.skewness.unwrap() - 0.41028108171019856).abs() < 1e-12);
        assert!((s.kurtosis.unwrap() - -1.6839863433270033).abs() < 1e-12);
        assert!((s.mean - 4.055555555555555).abs() < 1e-12);
        assert!((s.cv.unwrap() - s.std / s.mean).abs() < 1e-15);
    }

    #[test]
    fn constant_column_flags_moments() {
        let s = describe_column("c", &[5.0, 5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.cv, Some(0.0));
        assert!(s.skewness.is_none() && s.kurtosis.is_none());
        assert!(s.moment_error.is_some());
    }

    #[test]
    fn too_few_rows() {
        assert!(describe_column("x", &[1.0, 2.0]).is_err());
        let s = describe_column("x", &[1.0, 2.0, 4.0]).unwrap();
        assert!(s.skewness.is_some() && s.kurtosis.is_none());
    }
}
