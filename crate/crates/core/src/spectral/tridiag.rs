//! Implicit QL iteration for symmetric tridiagonal matrices.
//!
//! The rotation callback lets the caller accumulate as much of the
//! eigenvector matrix as it needs: nothing, only its last row (Lanczos
//! residual estimates, O(m) per sweep), or all of it.

use crate::error::{EdgeError, Result};

const MAX_SWEEPS: usize = 60;

/// Diagonalise `T = tridiag(off, diag, off)` in place. On return `diag`
/// holds the (unsorted) eigenvalues. `off[i]` couples `i` and `i+1`;
/// `off` must have the same length as `diag` (last entry ignored).
/// `rotate(i, s, c)` is called for every Givens rotation acting on
/// columns `i, i+1` of the eigenvector matrix.
pub fn ql_implicit(diag: &mut [f64], off: &mut [f64], rotate: &mut dyn FnMut(usize, f64, f64)) -> Result<()> {
    let n = diag.len();
    assert_eq!(off.len(), n);
    if n == 0 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(EdgeError::NonConvergence { iterations: iter });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                rotate(i, s, c);
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues plus the last row of the eigenvector matrix.
pub fn eigen_last_row(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.resize(n, 0.0);
    let mut last = vec![0.0; n];
    if n > 0 {
        last[n - 1] = 1.0;
    }
    ql_implicit(&mut d, &mut e, &mut |i, s, c| {
        let f = last[i + 1];
        last[i + 1] = s * last[i] + c * f;
        last[i] = c * last[i] - s * f;
    })?;
    Ok((d, last))
}

/// Eigenvalues with the full eigenvector matrix (column-major, `n*n`).
pub fn eigen_full(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.resize(n, 0.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    ql_implicit(&mut d, &mut e, &mut |i, s, c| {
        let (left, right) = z.split_at_mut((i + 1) * n);
        let zi = &mut left[i * n..];
        let zi1 = &mut right[..n];
        for k in 0..n {
            let f = zi1[k];
            zi1[k] = s * zi[k] + c * f;
            zi[k] = c * zi[k] - s * f;
        }
    })?;
    Ok((d, z))
}
