use serde::{Deserialize, Serialize};

use super::{mean, sample_variance, t_upper_tail};
use crate::{Error, Result};

/// Alternative hypothesis for a one-tailed test on `mean(a) - mean(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `mean(a) > mean(b)`
    Greater,
    /// `mean(a) < mean(b)`
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance t test, one-tailed in `direction`.
pub fn one_tailed_welch(a: &[f64], b: &[f64], direction: Direction) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Welch test needs at least 2 observations per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite observation in Welch test".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    if va + vb == 0.0 {
        return Err(Error::InvalidArgument("both samples have zero variance".into()));
    }
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let p = match direction {
        Direction::Greater => t_upper_tail(t, df)?,
        Direction::Less => t_upper_tail(-t, df)?,
    };
    Ok(WelchTest { t, df, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integrates `f` on `[a, b]` by adaptive Simpson.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    /// `P(T > t)` from the unnormalised t kernel, integrated over `θ` with `t = tan θ`.
    fn quadrature_t_tail(t: f64, df: f64) -> f64 {
        let kernel = |theta: f64| {
            let x = theta.tan();
            let c = theta.cos();
            (1.0 + x * x / df).powf(-(df + 1.0) / 2.0) / (c * c)
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        let total = simpson(&kernel, -half_pi, half_pi, 1e-14);
        let tail = simpson(&kernel, t.atan(), half_pi, 1e-14);
        tail / total
    }

    #[test]
    fn identical_samples_are_null() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let w = one_tailed_welch(&a, &a, Direction::Greater).unwrap();
        assert_eq!(w.t, 0.0);
        assert!((w.p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn extreme_separation() {
        let w = one_tailed_welch(&[10.0, 10.1, 9.9], &[0.0, 0.1, -0.1], Direction::Greater).unwrap();
        assert!(w.p < 1e-3, "{w:?}");
        let w = one_tailed_welch(&[10.0, 10.1, 9.9], &[0.0, 0.1, -0.1], Direction::Less).unwrap();
        assert!(w.p > 0.999);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(one_tailed_welch(&[1.0], &[1.0, 2.0], Direction::Greater).is_err());
        assert!(one_tailed_welch(&[1.0, 1.0], &[2.0, 2.0], Direction::Greater).is_err());
        // zero variance in one sample only is fine
        assert!(one_tailed_welch(&[1.0, 1.0], &[2.0, 3.0], Direction::Greater).is_ok());
    }

    #[test]
    fn five_vs_five_matches_quadrature() {
        let a = [0.944, 0.941, 0.946, 0.943, 0.947];
        let b = [0.842, 0.840, 0.845, 0.839, 0.843];
        let c = [0.93, 0.95, 0.91, 0.97, 0.94];
        for (x, y) in [(&a, &b), (&b, &a), (&a, &c), (&c, &a)] {
            let w = one_tailed_welch(x, y, Direction::Greater).unwrap();
            let q = quadrature_t_tail(w.t, w.df);
            assert!((w.p - q).abs() < 1e-6, "{w:?} vs {q}");
        }
    }
}
