//! Operator norms and extreme eigenvalues of small dense matrices.

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative residual at which power iteration stops.
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 10_000;
/// Matrices up to this size fall back to a dense eigensolve when power iteration stalls.
pub const DENSE_FALLBACK_DIM: usize = 64;
/// Symmetric matrices up to this size get `lambda_min` from a dense eigensolve.
pub const DENSE_EIGEN_DIM: usize = 512;

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_owned()))
    }
}

// Deterministic, generic start vector. A constant vector is a poor choice since
// many structured matrices (circulants, adjacency matrices) have it as an eigenvector.
fn start_vector(n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |i, _| {
        1.0 + 0.5 * ((i as f64 + 1.0) * 1.618_033_988_75).sin()
    });
    let norm = v.norm();
    v / norm
}

/// Outcome of power iteration on a symmetric positive semidefinite matrix.
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// relative-residual stopping rule `|Bv - lambda v| <= tol * lambda`.
pub fn power_iteration_psd(b: &DMatrix<f64>, tol: f64, max_iter: usize) -> PowerIteration {
    let n = b.nrows();
    let mut v = start_vector(n);
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        let w = b * &v;
        lambda = v.dot(&w);
        let wnorm = w.norm();
        if wnorm == 0.0 {
            return PowerIteration {
                eigenvalue: 0.0,
                iterations: it,
                converged: true,
            };
        }
        let residual = (&w - &v * lambda).norm();
        if residual <= tol * lambda.abs() {
            return PowerIteration {
                eigenvalue: lambda,
                iterations: it,
                converged: true,
            };
        }
        v = w / wnorm;
    }
    PowerIteration {
        eigenvalue: lambda,
        iterations: max_iter,
        converged: false,
    }
}

/// Operator 2-norm (largest singular value) of `m`.
///
/// Power iteration on the smaller of `M^T M` and `M M^T`; if that fails to reach
/// [`POWER_TOL`] within [`POWER_MAX_ITER`] steps and the Gram matrix is at most
/// [`DENSE_FALLBACK_DIM`] wide, a dense symmetric eigensolve decides.
pub fn operator_two_norm(m: &DMatrix<f64>) -> Result<f64> {
    check_finite(m, "matrix passed to operator_two_norm")?;
    if m.is_empty() {
        return Ok(0.0);
    }
    let gram = if m.ncols() <= m.nrows() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let p = power_iteration_psd(&gram, POWER_TOL, POWER_MAX_ITER);
    if p.converged {
        return Ok(p.eigenvalue.max(0.0).sqrt());
    }
    if gram.nrows() <= DENSE_FALLBACK_DIM {
        debug!(
            "power iteration stalled after {} steps; dense fallback",
            p.iterations
        );
        let top = gram.symmetric_eigenvalues().max();
        return Ok(top.max(0.0).sqrt());
    }
    debug!(
        "power iteration stalled at dimension {}; returning estimate",
        gram.nrows()
    );
    Ok(p.eigenvalue.max(0.0).sqrt())
}

/// Maximum absolute row sum.
pub fn operator_inf_norm(m: &DMatrix<f64>) -> Result<f64> {
    check_finite(m, "matrix passed to operator_inf_norm")?;
    Ok(m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Maximum absolute column sum.
pub fn operator_one_norm(m: &DMatrix<f64>) -> Result<f64> {
    check_finite(m, "matrix passed to operator_one_norm")?;
    Ok(m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// `(M + M^T) / 2`
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
///
/// Dense eigensolve up to [`DENSE_EIGEN_DIM`]; above that, power iteration on the
/// shifted matrix `cI - S` with `c` a Gershgorin bound on the spectrum.
pub fn lambda_min(s: &DMatrix<f64>) -> Result<f64> {
    check_finite(s, "matrix passed to lambda_min")?;
    if s.is_empty() {
        return Err(Error::InvalidParameter(
            "lambda_min of an empty matrix".into(),
        ));
    }
    if s.nrows() <= DENSE_EIGEN_DIM {
        return Ok(s.clone().symmetric_eigenvalues().min());
    }
    let shift = operator_inf_norm(s)?;
    let n = s.nrows();
    let shifted = DMatrix::identity(n, n) * shift - s;
    // cI - S is PSD; its top eigenvalue is c - lambda_min(S)
    let p = power_iteration_psd(&shifted, POWER_TOL, 50 * POWER_MAX_ITER);
    if !p.converged {
        debug!("shifted power iteration did not reach tolerance at dimension {n}");
    }
    Ok(shift - p.eigenvalue)
}

/// Spectral radius of a symmetric matrix, `max |lambda_i|`.
pub fn spectral_radius_symmetric(s: &DMatrix<f64>) -> Result<f64> {
    check_finite(s, "matrix passed to spectral_radius_symmetric")?;
    Ok(s.clone().symmetric_eigenvalues().amax())
}
