use serde::{Deserialize, Serialize};

use super::{f_critical, f_upper_tail};
use crate::{Error, Result};

/// Observations of a fully balanced `a × b` design with `r` replicates per cell,
/// stored `[i][j][k]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorialData {
    levels_a: usize,
    levels_b: usize,
    replicates: usize,
    obs: Vec<f64>,
}

impl FactorialData {
    /// `cells[i][j]` holds the replicates for level `i` of A and `j` of B.
    pub fn new(cells: &[Vec<Vec<f64>>]) -> Result<Self> {
        let a = cells.len();
        let b = cells.first().map_or(0, Vec::len);
        let r = cells.first().and_then(|row| row.first()).map_or(0, Vec::len);
        if a < 2 || b < 2 || r < 2 {
            return Err(Error::InvalidArgument(format!(
                "two-way ANOVA needs a >= 2, b >= 2, r >= 2; got {a}x{b}x{r}"
            )));
        }
        let mut obs = Vec::with_capacity(a * b * r);
        for (i, row) in cells.iter().enumerate() {
            if row.len() != b {
                return Err(Error::InvalidArgument(format!(
                    "unbalanced design: A level {i} has {} B levels, expected {b}",
                    row.len()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                if cell.len() != r {
                    return Err(Error::InvalidArgument(format!(
                        "unbalanced design: cell ({i}, {j}) has {} replicates, expected {r}",
                        cell.len()
                    )));
                }
                obs.extend_from_slice(cell);
            }
        }
        if obs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite observation in ANOVA".into()));
        }
        Ok(FactorialData {
            levels_a: a,
            levels_b: b,
            replicates: r,
            obs,
        })
    }

    pub fn levels_a(&self) -> usize {
        self.levels_a
    }

    pub fn levels_b(&self) -> usize {
        self.levels_b
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.obs[(i * self.levels_b + j) * self.replicates + k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub ss: f64,
    pub df: usize,
    pub ms: Option<f64>,
    pub f: Option<f64>,
    pub p: Option<f64>,
    pub f_crit: Option<f64>,
}

/// Rows in order: Factor A, Factor B, Interaction, Error, Total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub alpha: f64,
}

impl AnovaTable {
    pub fn factor_a(&self) -> &AnovaRow {
        &self.rows[0]
    }

    pub fn factor_b(&self) -> &AnovaRow {
        &self.rows[1]
    }

    pub fn interaction(&self) -> &AnovaRow {
        &self.rows[2]
    }

    pub fn error(&self) -> &AnovaRow {
        &self.rows[3]
    }

    pub fn total(&self) -> &AnovaRow {
        &self.rows[4]
    }

    /// CSV with header `Source,SS,df,MS,F,P-value,F crit`; cells that do not
    /// apply are left empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from("Source,SS,df,MS,F,P-value,F crit\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{},{},{},{},{}\n",
                r.source,
                r.ss,
                r.df,
                opt(r.ms),
                opt(r.f),
                opt(r.p),
                opt(r.f_crit)
            ));
        }
        out
    }
}

/// Standard balanced decomposition with interaction. F critical values are
/// reported at `alpha = 0.05`.
pub fn two_way_anova(data: &FactorialData) -> Result<AnovaTable> {
    let (a, b, r) = (data.levels_a, data.levels_b, data.replicates);
    let n = (a * b * r) as f64;
    let grand = data.obs.iter().sum::<f64>() / n;

    let mut cell = vec![0.0; a * b];
    for i in 0..a {
        for j in 0..b {
            cell[i * b + j] = (0..r).map(|k| data.get(i, j, k)).sum::<f64>() / r as f64;
        }
    }
    let mean_a: Vec<f64> = (0..a).map(|i| (0..b).map(|j| cell[i * b + j]).sum::<f64>() / b as f64).collect();
    let mean_b: Vec<f64> = (0..b).map(|j| (0..a).map(|i| cell[i * b + j]).sum::<f64>() / a as f64).collect();

    let ss_a = (b * r) as f64 * mean_a.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = (a * r) as f64 * mean_b.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_e = 0.0;
    for i in 0..a {
        for j in 0..b {
            let c = cell[i * b + j];
            ss_ab += (c - mean_a[i] - mean_b[j] + grand).powi(2);
            for k in 0..r {
                ss_e += (data.get(i, j, k) - c).powi(2);
            }
        }
    }
    ss_ab *= r as f64;
    let ss_t: f64 = data.obs.iter().map(|x| (x - grand).powi(2)).sum();

    if ss_e <= 1e-13 * ss_t || ss_e == 0.0 {
        return Err(Error::InvalidArgument(
            "zero within-cell variance: F statistics are undefined".into(),
        ));
    }

    let df_a = a - 1;
    let df_b = b - 1;
    let df_ab = df_a * df_b;
    let df_e = a * b * (r - 1);
    let ms_e = ss_e / df_e as f64;
    let alpha = 0.05;
    let effect = |source: &str, ss: f64, df: usize| -> Result<AnovaRow> {
        let ms = ss / df as f64;
        let f = ms / ms_e;
        Ok(AnovaRow {
            source: source.into(),
            ss,
            df,
            ms: Some(ms),
            f: Some(f),
            p: Some(f_upper_tail(f, df as f64, df_e as f64)?),
            f_crit: Some(f_critical(alpha, df as f64, df_e as f64)?),
        })
    };
    Ok(AnovaTable {
        rows: vec![
            effect("Factor A", ss_a, df_a)?,
            effect("Factor B", ss_b, df_b)?,
            effect("Interaction", ss_ab, df_ab)?,
            AnovaRow {
                source: "Error".into(),
                ss: ss_e,
                df: df_e,
                ms: Some(ms_e),
                f: None,
                p: None,
                f_crit: None,
            },
            AnovaRow {
                source: "Total".into(),
                ss: ss_t,
                df: a * b * r - 1,
                ms: None,
                f: None,
                p: None,
                f_crit: None,
            },
        ],
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Sums-of-squares through cell totals and the correction term, never
    /// forming deviations from means.
    fn totals_oracle(cells: &[Vec<Vec<f64>>]) -> [f64; 5] {
        let (a, b, r) = (cells.len(), cells[0].len(), cells[0][0].len());
        let n = (a * b * r) as f64;
        let all: Vec<f64> = cells.iter().flatten().flatten().copied().collect();
        let t: f64 = all.iter().sum();
        let c = t * t / n;
        let ta: f64 = cells.iter().map(|row| row.iter().flatten().sum::<f64>().powi(2)).sum::<f64>() / (b * r) as f64;
        let tb: f64 = (0..b)
            .map(|j| cells.iter().map(|row| row[j].iter().sum::<f64>()).sum::<f64>().powi(2))
            .sum::<f64>()
            / (a * r) as f64;
        let tc: f64 = cells.iter().flatten().map(|c| c.iter().sum::<f64>().powi(2)).sum::<f64>() / r as f64;
        let sq: f64 = all.iter().map(|x| x * x).sum();
        let (ss_a, ss_b, ss_cells, ss_t) = (ta - c, tb - c, tc - c, sq - c);
        [ss_a, ss_b, ss_cells - ss_a - ss_b, ss_t - ss_cells, ss_t]
    }

    fn random_design(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<Vec<f64>>> {
        let (a, b, r) = (rng.random_range(2..5), rng.random_range(2..6), rng.random_range(2..7));
        let shift: f64 = rng.random_range(-5.0..5.0);
        (0..a)
            .map(|i| {
                (0..b)
                    .map(|j| (0..r).map(|_| shift + i as f64 * 0.3 - j as f64 * 0.2 + rng.random_range(-1.0..1.0)).collect())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_totals_oracle_on_random_designs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..50 {
            let cells = random_design(&mut rng);
            let t = two_way_anova(&FactorialData::new(&cells).unwrap()).unwrap();
            let expect = totals_oracle(&cells);
            for (row, e) in t.rows.iter().zip(expect) {
                assert!((row.ss - e).abs() <= 1e-9 * e.abs().max(1e-12), "{}: {} vs {e}", row.source, row.ss);
            }
            let ms_e = expect[3] / t.error().df as f64;
            for (row, e) in t.rows.iter().zip(expect).take(3) {
                let f = e / row.df as f64 / ms_e;
                assert!((row.f.unwrap() - f).abs() <= 1e-9 * f.abs().max(1e-12));
            }
            let ss: f64 = t.rows[..4].iter().map(|r| r.ss).sum();
            assert!((ss - t.total().ss).abs() <= 1e-9 * t.total().ss);
            let df: usize = t.rows[..4].iter().map(|r| r.df).sum();
            assert_eq!(df, t.total().df);
        }
    }

    proptest! {
        #[test]
        fn adding_a_constant_changes_nothing(seed in 0u64..1_000_000, c in -1e3f64..1e3) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cells = random_design(&mut rng);
            let moved: Vec<Vec<Vec<f64>>> =
                cells.iter().map(|r| r.iter().map(|c2| c2.iter().map(|x| x + c).collect()).collect()).collect();
            let t = two_way_anova(&FactorialData::new(&cells).unwrap()).unwrap();
            let u = two_way_anova(&FactorialData::new(&moved).unwrap()).unwrap();
            for (x, y) in t.rows.iter().zip(&u.rows) {
                prop_assert!((x.ss - y.ss).abs() <= 1e-9 * x.ss.abs().max(1.0));
                if let (Some(f), Some(g)) = (x.f, y.f) {
                    prop_assert!((f - g).abs() <= 1e-9 * f.abs().max(1.0));
                    prop_assert!((x.p.unwrap() - y.p.unwrap()).abs() <= 1e-9);
                }
            }
        }
    }

    fn small() -> FactorialData {
        FactorialData::new(&[
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![vec![5.0, 6.0], vec![7.0, 8.0]],
        ])
        .unwrap()
    }

    #[test]
    fn two_by_two_by_two_worked_example() {
        let t = two_way_anova(&small()).unwrap();
        assert!((t.factor_a().ss - 32.0).abs() < 1e-12);
        assert!((t.factor_b().ss - 8.0).abs() < 1e-12);
        assert!(t.interaction().ss.abs() < 1e-12);
        assert!((t.error().ss - 2.0).abs() < 1e-12);
        assert!((t.factor_a().f.unwrap() - 64.0).abs() < 1e-10);
        assert!((t.total().ss - 42.0).abs() < 1e-12);
    }

    #[test]
    fn df_column_for_paper_grid_shape() {
        let cells: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|i| (0..4).map(|j| (0..5).map(|k| (i * 7 + j * 3 + k * k) as f64).collect()).collect())
            .collect();
        let t = two_way_anova(&FactorialData::new(&cells).unwrap()).unwrap();
        let dfs: Vec<usize> = t.rows.iter().map(|r| r.df).collect();
        assert_eq!(dfs, vec![1, 3, 3, 32, 39]);
        assert!((t.factor_a().f_crit.unwrap() - 4.1491).abs() < 1e-3);
        assert!((t.factor_b().f_crit.unwrap() - 2.9011).abs() < 1e-3);
    }

    #[test]
    fn degenerate_and_unbalanced_inputs() {
        let flat = vec![vec![vec![3.0, 3.0], vec![3.0, 3.0]], vec![vec![3.0, 3.0], vec![3.0, 3.0]]];
        assert!(two_way_anova(&FactorialData::new(&flat).unwrap()).is_err());
        let ragged = vec![vec![vec![1.0, 2.0], vec![3.0]], vec![vec![5.0, 6.0], vec![7.0, 8.0]]];
        assert!(FactorialData::new(&ragged).is_err());
        assert!(FactorialData::new(&[vec![vec![1.0, 2.0]], vec![vec![1.0, 2.0]]]).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = two_way_anova(&small()).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "Source,SS,df,MS,F,P-value,F crit");
        assert_eq!(lines.len(), 6);
        assert!(lines[4].starts_with("Error,"));
        assert!(lines[5].ends_with(",,,,"));
    }
}
