//! Dense least-squares kernels shared by the solver and the baselines.
//!
//! The minimum-norm path compresses tall systems with a QR factorization
//! and applies a rank-revealing SVD to the triangular factor. Every SVD is
//! verified by recomposition: the bidiagonalization-based solver can lose
//! accuracy on rank-deficient triangular inputs, in which case a one-sided
//! Jacobi SVD (slower, but accurate at machine precision) takes over.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum Golub-Kahan iterations before the SVD counts as failed.
const SVD_MAX_NITER: usize = 10_000;

/// Jacobi sweep cap; convergence normally takes well under ten sweeps.
const JACOBI_MAX_SWEEPS: usize = 60;

/// Relative rank threshold: singular values below `RCOND * sigma_max` are
/// treated as zero. Directions this small are dominated by accumulated
/// rounding in the assembled systems; inverting them explodes coefficient
/// norms without a meaningful residual reduction.
const RCOND: f64 = 1e-10;

/// Minimizer of `|y - M s|^2 + ridge * |s|^2`.
///
/// With `ridge = 0` and rank-deficient `M` this is the minimum-norm
/// least-squares solution. A positive ridge is handled by solving the
/// row-augmented system `[M; sqrt(ridge) I]`.
pub fn lstsq(m: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    if m.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient matrix has {} rows but rhs has {} entries",
            m.nrows(),
            y.len()
        )));
    }
    if ridge < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ridge must be nonnegative, got {ridge}"
        )));
    }
    if !m.iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("least-squares system"));
    }
    if ridge > 0.0 {
        let (rows, cols) = m.shape();
        let mut aug = DMatrix::zeros(rows + cols, cols);
        aug.view_mut((0, 0), (rows, cols)).copy_from(m);
        let sq = ridge.sqrt();
        for k in 0..cols {
            aug[(rows + k, k)] = sq;
        }
        let mut yaug = DVector::zeros(rows + cols);
        yaug.rows_mut(0, rows).copy_from(y);
        return Ok(min_norm_lstsq(&aug, &yaug));
    }
    Ok(min_norm_lstsq(m, y))
}

fn min_norm_lstsq(m: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (rows, cols) = m.shape();
    if rows > cols {
        // (Q R)^+ = R^+ Q^T since Q has orthonormal columns.
        let qr = m.clone().qr();
        let mut qty = y.clone();
        qr.q_tr_mul(&mut qty);
        svd_min_norm(&qr.r(), &qty.rows(0, cols).into_owned())
    } else {
        svd_min_norm(m, y)
    }
}

/// Pseudoinverse application via a verified SVD; singular values below
/// `max(rows, cols) * eps * sigma_max` count as zero.
fn svd_min_norm(m: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if let Some(x) = golub_kahan_min_norm(m, y) {
        return x;
    }
    log::debug!(
        "SVD verification failed on a {}x{} system, switching to Jacobi",
        m.nrows(),
        m.ncols()
    );
    jacobi_min_norm(m, y)
}

fn golub_kahan_min_norm(m: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let (rows, cols) = m.shape();
    let svd = m.clone().try_svd(true, true, f64::EPSILON, SVD_MAX_NITER)?;
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    let sigma = &svd.singular_values;
    if sigma.iter().any(|s| !s.is_finite()) {
        return None;
    }
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    // recomposition check: a converged, accurate factorization reproduces
    // the input to a modest multiple of machine precision
    let recomposed = u * DMatrix::from_diagonal(sigma) * v_t;
    let err = (m - recomposed).amax();
    if err > 100.0 * rows.max(cols) as f64 * f64::EPSILON * sigma_max.max(1e-300) {
        return None;
    }
    Some(apply_pinv(u, sigma, v_t, y, rows.max(cols)))
}

/// `V diag(1/sigma) U^T y` with relative cutoff.
fn apply_pinv(
    u: &DMatrix<f64>,
    sigma: &DVector<f64>,
    v_t: &DMatrix<f64>,
    y: &DVector<f64>,
    dim: usize,
) -> DVector<f64> {
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let tol = (dim as f64 * f64::EPSILON).max(RCOND) * sigma_max;
    let mut scaled = u.transpose() * y;
    for (i, coeff) in scaled.iter_mut().enumerate() {
        if sigma[i] > tol {
            *coeff /= sigma[i];
        } else {
            *coeff = 0.0;
        }
    }
    v_t.transpose() * scaled
}

/// Minimum-norm least squares through a one-sided Jacobi SVD.
fn jacobi_min_norm(m: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (rows, cols) = m.shape();
    if rows < cols {
        // M = V Sigma U^T from the SVD of the tall transpose, so
        // M^+ = U Sigma^+ V^T.
        let (v, sigma, u) = jacobi_svd(&m.transpose());
        return apply_pinv(&v, &sigma, &u.transpose(), y, rows.max(cols));
    }
    let (u, sigma, v) = jacobi_svd(m);
    apply_pinv(&u, &sigma, &v.transpose(), y, rows.max(cols))
}

/// One-sided Jacobi SVD of a tall-or-square matrix: returns `(U, sigma, V)`
/// with `A = U diag(sigma) V^T`. Zero singular values keep zero `U`
/// columns.
fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (rows, cols) = a.shape();
    debug_assert!(rows >= cols);
    let mut w = a.clone();
    let mut v = DMatrix::identity(cols, cols);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for r in 0..rows {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if apq == 0.0 || apq.abs() <= f64::EPSILON * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    w[(r, p)] = c * wp - s * wq;
                    w[(r, q)] = s * wp + c * wq;
                }
                for r in 0..cols {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = c * vp - s * vq;
                    v[(r, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = DVector::zeros(cols);
    let mut u = DMatrix::zeros(rows, cols);
    for k in 0..cols {
        let norm = w.column(k).norm();
        sigma[k] = norm;
        if norm > 0.0 {
            u.set_column(k, &(w.column(k) / norm));
        }
    }
    (u, sigma, v)
}
