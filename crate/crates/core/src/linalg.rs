//! Small dense linear-algebra helpers shared by the model, quadrature and
//! simulation code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// Checks that `m` is square, symmetric and positive semi-definite.
pub(crate) fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonPsdCovariance { what: what.to_string() });
    }
    let scale = scale_of(m);
    for i in 0..m.nrows() {
        if m[(i, i)] < 0.0 {
            return Err(Error::NonPsdCovariance { what: what.to_string() });
        }
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NonPsdCovariance { what: what.to_string() });
            }
        }
    }
    if m.nrows() == 0 {
        return Ok(());
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL * scale {
        return Err(Error::NonPsdCovariance { what: what.to_string() });
    }
    Ok(())
}

/// Returns a square root `L` with `L L' = m`.
///
/// Uses the Cholesky factor when `m` is positive definite. Singular PSD
/// matrices fall back to `V diag(sqrt(max(λ, 0)))` and log a warning.
pub(crate) fn sqrt_factor(m: &DMatrix<f64>, what: &str) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    if let Some(chol) = m.clone().cholesky() {
        return chol.l();
    }
    log::warn!("{what} is singular; clipping negative eigenvalues at zero");
    let eig = SymmetricEigen::new(m.clone());
    let mut root = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        root.column_mut(j).scale_mut(s);
    }
    root
}

/// Inverse of a symmetric positive-definite matrix, refusing matrices whose
/// condition number exceeds `max_condition`.
pub(crate) fn spd_inverse(m: &DMatrix<f64>, max_condition: f64) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > max_condition {
        return None;
    }
    m.clone().cholesky().map(|c| c.inverse())
}

/// Log density of `N(mean, cov)` at `x`, given the precomputed inverse and
/// log-determinant of `cov`.
pub(crate) fn mvn_log_density(
    x: &[f64],
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    log_det: f64,
) -> f64 {
    let d = mean.len();
    let mut quad = 0.0;
    for i in 0..d {
        let di = x[i] - mean[i];
        for j in 0..d {
            quad += di * precision[(i, j)] * (x[j] - mean[j]);
        }
    }
    -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_diagonal_is_not_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(check_psd(&m, "m").is_err());
    }

    #[test]
    fn asymmetric_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(check_psd(&m, "m").is_err());
    }

    #[test]
    fn singular_factor_reproduces_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        check_psd(&m, "m").unwrap();
        let l = sqrt_factor(&m, "m");
        let back = &l * l.transpose();
        assert!((back - m).abs().max() < 1e-12);
    }

    #[test]
    fn inverse_refuses_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(spd_inverse(&m, 1e12).is_none());
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let inv = spd_inverse(&m, 1e12).unwrap();
        assert!((&m * inv - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }
}
