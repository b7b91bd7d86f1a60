//! Balanced two-factor ANOVA, one-tailed Welch tests and the distribution tails
//! behind them.

mod anova;
mod special;
mod welch;

pub use anova::{two_way_anova, AnovaRow, AnovaTable, FactorialData};
pub use special::{f_critical, f_upper_tail, ln_gamma, regularized_incomplete_beta, t_upper_tail};
pub use welch::{one_tailed_welch, Direction, WelchTest};

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}
