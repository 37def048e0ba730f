//! Closed-form mutual information of the scenario families.

use std::f64::consts::PI;

use super::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::special::{digamma, ln_beta, ln_gamma};

/// MI of a multivariate normal: −½·log(det Σ / Π σ_ii).
pub fn gaussian_true_mi(cov: &CovarianceMatrix) -> f64 {
    let log_diag: f64 = (0..cov.dim()).map(|i| cov.get(i, i).ln()).sum();
    // Clamp the rounding residue for diagonal matrices.
    (0.5 * (log_diag - cov.log_det())).max(0.0)
}

/// MI among the coordinates of a `d`-variate Student t with `df` degrees of
/// freedom, location 0 and identity scale.
///
/// The sum of the `d` univariate t entropies minus the joint entropy.
pub fn student_true_mi(df: f64, d: usize) -> Result<f64> {
    if !(df.is_finite() && df > 0.0) {
        return Err(Error::param(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if d == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    let dd = d as f64;
    let marginal = (df + 1.0) / 2.0 * (digamma((1.0 + df) / 2.0) - digamma(df / 2.0))
        + 0.5 * df.ln()
        + ln_beta(df / 2.0, 0.5);
    let half = (df + dd) / 2.0;
    let log_norm = ln_gamma(half) - ln_gamma(df / 2.0) - dd / 2.0 * (df * PI).ln();
    let joint = -log_norm + half * (digamma(half) - digamma(df / 2.0));
    Ok((dd * marginal - joint).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn gaussian_reference_values() {
        for d in 1..6 {
            assert_eq!(
                gaussian_true_mi(&CovarianceMatrix::identity(d).unwrap()),
                0.0
            );
        }
        let s2 = CovarianceMatrix::sigma(2).unwrap();
        close(gaussian_true_mi(&s2), -0.5 * (1.75f64 / 2.0).ln(), 1e-14);
        close(gaussian_true_mi(&s2), 0.066, 0.001);
        for d in 2..=4 {
            let a = CovarianceMatrix::last_pair(d).unwrap();
            close(gaussian_true_mi(&a), -0.5 * 0.75f64.ln(), 1e-14);
        }
        close(
            gaussian_true_mi(&CovarianceMatrix::sigma(4).unwrap()),
            0.450,
            0.001,
        );
    }

    #[test]
    fn student_reference_values() {
        close(student_true_mi(3.0, 2).unwrap(), 0.042, 0.001);
        close(student_true_mi(3.0, 3).unwrap(), 0.110, 0.001);
        close(student_true_mi(3.0, 4).unwrap(), 0.195, 0.001);
        close(student_true_mi(20.0, 2).unwrap(), 0.001, 0.001);
        close(student_true_mi(20.0, 4).unwrap(), 0.006, 0.001);
    }

    #[test]
    fn student_limits() {
        for d in 1..=4 {
            assert!(student_true_mi(1e4, d).unwrap() < 1e-3);
        }
        close(student_true_mi(5.0, 1).unwrap(), 0.0, 1e-12);
        assert!(student_true_mi(0.0, 2).is_err());
        assert!(student_true_mi(-1.0, 2).is_err());
        assert!(student_true_mi(3.0, 0).is_err());
        // decreasing in df
        let mut prev = f64::INFINITY;
        for df in [1.0, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 1000.0] {
            let v = student_true_mi(df, 3).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }
}
