use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{RawTable, CSV_COLUMNS};
use crate::data::CustomerRecord;
use crate::numcore::seeded_rng;

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// A seeded table with the churn schema and roughly one churner in five.
///
/// Churn follows a logistic model in age, activity, product count, geography,
/// gender and balance, so the features carry real (but imperfect) signal.
/// Intended for tests, benchmarks and demos when the public table is absent.
pub fn synthetic_table(n: usize, seed: u64) -> RawTable {
    let mut rng = seeded_rng(seed);
    let age = Normal::<f64>::new(39.0, 10.0).expect("valid");
    let credit = Normal::<f64>::new(650.0, 97.0).expect("valid");
    let balance = Normal::<f64>::new(120_000.0, 30_000.0).expect("valid");
    let rows = (0..n)
        .map(|i| {
            let geo = match rng.random_range(0..4) {
                0 | 1 => "France",
                2 => "Germany",
                _ => "Spain",
            };
            let gender = if rng.random_bool(0.55) { "Male" } else { "Female" };
            let a = age.sample(&mut rng).round().clamp(18.0, 92.0);
            let cs = credit.sample(&mut rng).round().clamp(350.0, 850.0);
            let tenure = rng.random_range(0..=10);
            let bal = if rng.random_bool(0.36) {
                0.0
            } else {
                cents(balance.sample(&mut rng).max(0.0))
            };
            let products = match rng.random_range(0..100) {
                0..50 => 1,
                50..96 => 2,
                96..99 => 3,
                _ => 4,
            };
            let card = i64::from(rng.random_bool(0.7));
            let active = i64::from(rng.random_bool(0.51));
            let salary = cents(rng.random_range(11.58..199_992.48));
            let z = -1.6 + 0.075 * (a - 39.0) + if geo == "Germany" { 0.8 } else { 0.0 }
                + if gender == "Female" { 0.5 } else { 0.0 }
                - 1.0 * active as f64
                + [0.0, -1.5, 2.5, 4.0][products - 1]
                + if bal > 0.0 { 0.3 } else { 0.0 }
                - 0.0007 * (cs - 650.0);
            let exited = u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-z).exp()));
            CustomerRecord {
                row_number: i as i64 + 1,
                customer_id: 15_600_000 + i as i64,
                surname: format!("S{i}"),
                credit_score: cs as i64,
                geography: geo.into(),
                gender: gender.into(),
                age: a as i64,
                tenure,
                balance: bal,
                num_of_products: products as i64,
                has_cr_card: card,
                is_active_member: active,
                estimated_salary: salary,
                exited,
            }
        })
        .collect();
    RawTable {
        columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_csv, prepare};

    #[test]
    fn looks_like_the_churn_table() {
        let t = synthetic_table(4000, 1);
        let churn = t.rows.iter().filter(|r| r.exited == 1).count() as f64 / 4000.0;
        assert!((0.12..0.30).contains(&churn), "churn fraction {churn}");
        let back = parse_csv(t.to_csv().as_bytes()).unwrap();
        assert_eq!(back, t);
        let ds = prepare(&back).unwrap();
        assert_eq!(ds.meta().cardinalities(), [3, 2, 4, 2, 2]);
        assert_eq!(synthetic_table(50, 1).rows, t.rows[..50]);
    }
}
