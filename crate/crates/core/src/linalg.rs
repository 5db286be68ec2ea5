//! Tiny dense solvers for the moment systems (at most 3 x 3) and the
//! normal equations of low-dimensional regressions. Hand-rolled on
//! purpose: the systems are fixed-size and a dependency on a full linear
//! algebra stack would be wildly out of proportion.

use crate::error::{Error, Result};

/// Condition estimates beyond this are treated as singular.
pub(crate) const MAX_CONDITION: f64 = 1e12;

/// Solve `A x = b` for a small square system (n <= 4 in practice) by
/// Gaussian elimination with partial pivoting, and estimate the 1-norm
/// condition number via the explicit inverse.
///
/// Returns `(solution, condition_estimate)`. A system whose condition
/// estimate exceeds [`MAX_CONDITION`] (or is not finite) yields
/// `Error::Singular`; callers that can name the cause more precisely map
/// the error themselves.
pub(crate) fn solve_conditioned(a: &[f64], n: usize, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);

    // Augment with b and the identity so one elimination produces both
    // the solution and the inverse (for the condition estimate).
    let width = n + 1 + n;
    let mut m = vec![0.0f64; n * width];
    for i in 0..n {
        for j in 0..n {
            m[i * width + j] = a[i * n + j];
        }
        m[i * width + n] = b[i];
        m[i * width + n + 1 + i] = 1.0;
    }

    for col in 0..n {
        // Partial pivot.
        let mut pivot_row = col;
        let mut pivot_mag = m[col * width + col].abs();
        for row in col + 1..n {
            let mag = m[row * width + col].abs();
            if mag > pivot_mag {
                pivot_row = row;
                pivot_mag = mag;
            }
        }
        if pivot_mag == 0.0 {
            return Err(Error::Singular { cond: f64::INFINITY });
        }
        if pivot_row != col {
            for j in 0..width {
                m.swap(col * width + j, pivot_row * width + j);
            }
        }
        let pivot = m[col * width + col];
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row * width + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..width {
                m[row * width + j] -= factor * m[col * width + j];
            }
        }
    }

    let mut x = vec![0.0f64; n];
    let mut inv = vec![0.0f64; n * n];
    for i in 0..n {
        let pivot = m[i * width + i];
        x[i] = m[i * width + n] / pivot;
        for j in 0..n {
            inv[i * n + j] = m[i * width + n + 1 + j] / pivot;
        }
    }

    let cond = norm_1(a, n) * norm_1(&inv, n);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::Singular { cond });
    }
    Ok((x, cond))
}

/// [`solve_conditioned`] after scaling each row (and its right-hand side)
/// to unit infinity norm.
///
/// The moment systems mix rows of very different magnitude — a squared
/// group-size row next to the plain total-variance row — and the raw
/// 1-norm condition number of such a system reflects the row scaling, not
/// its actual solvability. Equilibration makes the threshold meaningful.
pub(crate) fn solve_equilibrated(a: &[f64], n: usize, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut a2 = a.to_vec();
    let mut b2 = b.to_vec();
    for i in 0..n {
        let mx = (0..n).map(|j| a2[i * n + j].abs()).fold(0.0f64, f64::max);
        if mx > 0.0 {
            let inv = 1.0 / mx;
            for j in 0..n {
                a2[i * n + j] *= inv;
            }
            b2[i] *= inv;
        }
    }
    solve_conditioned(&a2, n, &b2)
}

/// Matrix 1-norm (maximum absolute column sum).
fn norm_1(a: &[f64], n: usize) -> f64 {
    let mut best = 0.0f64;
    for j in 0..n {
        let mut col = 0.0f64;
        for i in 0..n {
            col += a[i * n + j].abs();
        }
        best = best.max(col);
    }
    best
}

/// Solve the symmetric positive definite system `A x = b` by Cholesky
/// factorisation (used for regression normal equations). Returns
/// `Error::RankDeficient` when a pivot collapses relative to the matrix
/// scale.
pub(crate) fn cholesky_solve(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);

    let scale = (0..n)
        .map(|i| a[i * n + i].abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let tol = scale * 1e-12;

    // Lower-triangular factor, row by row.
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= tol {
                    return Err(Error::RankDeficient);
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }

    // Forward then backward substitution.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Ok(x)
}
