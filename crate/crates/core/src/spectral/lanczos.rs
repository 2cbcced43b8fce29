//! Lanczos with full (twice-applied) reorthogonalisation.
//!
//! When the Krylov space becomes invariant the current block is closed and a
//! fresh random direction orthogonal to everything seen so far starts a new
//! block, so repeated eigenvalues are recovered with their multiplicities.

use rand::Rng;
use rand_distr::StandardNormal;

use super::tridiag::{eigen_full, eigen_last_row};
use super::{LinearOperator, SolverMethod, SpectralResult};
use crate::error::{EdgeError, Result};
use crate::seeding::substream;

const START_STREAM: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Residual bound `||A v - lambda v||` for every returned pair.
    pub tol: f64,
    /// Krylov dimension cap (defaults to `n`).
    pub max_iter: Option<usize>,
    pub want_vectors: bool,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_iter: None,
            want_vectors: false,
            seed: 0,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in basis {
            let h = dot(w, v);
            axpy(-h, v, w);
        }
    }
}

/// Random unit vector orthogonal to `basis`, or `None` if the basis already
/// spans the space numerically.
fn fresh_direction<R: Rng>(n: usize, basis: &[Vec<f64>], rng: &mut R) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let before = norm(&w);
        orthogonalize(&mut w, basis);
        let after = norm(&w);
        if after > 1e-8 * before {
            w.iter_mut().for_each(|x| *x /= after);
            return Some(w);
        }
    }
    None
}

struct Ritz {
    values: Vec<f64>,
    /// Residual estimates `beta_m |z_last|`; zero for closed blocks.
    residuals: Vec<f64>,
}

fn ritz(alpha: &[f64], beta: &[f64], b_last: f64) -> Result<Ritz> {
    let (vals, last) = eigen_last_row(alpha, beta)?;
    let residuals = last.iter().map(|z| (b_last * z).abs()).collect();
    Ok(Ritz {
        values: vals,
        residuals,
    })
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// k-th largest of a list (1-based `k`), if it has that many entries.
fn kth_largest(values: impl Iterator<Item = f64>, k: usize) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.len() < k {
        return None;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Some(v[k - 1])
}

/// Top-`k` eigenpairs of a symmetric operator.
pub fn lanczos_top_k<A: LinearOperator + ?Sized>(op: &A, k: usize, opts: &LanczosOptions) -> Result<SpectralResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(EdgeError::Dimension(format!("k = {k} must lie in 1..={n}")));
    }
    if !(opts.tol > 0.0) {
        return Err(EdgeError::InvalidParameter(format!(
            "tol = {} must be positive",
            opts.tol
        )));
    }
    let max_iter = opts.max_iter.unwrap_or(n).clamp(k.min(n), n);
    let mut rng = substream(opts.seed, START_STREAM);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter.min(512));
    let mut alpha: Vec<f64> = Vec::new();
    // beta[j] couples basis j and j+1; zero across block boundaries.
    let mut beta: Vec<f64> = Vec::new();
    let mut block_start = 0usize;
    let mut breakdowns = 0usize;
    let mut scale = 0.0f64;
    let mut w = vec![0.0; n];
    let mut next_check = k.max(8);
    let converged;
    let b_last;

    let mut current = match fresh_direction(n, &basis, &mut rng) {
        Some(v) => v,
        None => return Err(EdgeError::Dimension("empty operator".into())),
    };

    loop {
        op.apply(&current, &mut w);
        let a = dot(&w, &current);
        axpy(-a, &current, &mut w);
        if basis.len() > block_start {
            let b_prev = *beta.last().unwrap();
            axpy(-b_prev, basis.last().unwrap(), &mut w);
        }
        basis.push(std::mem::take(&mut current));
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        scale = scale.max(a.abs() + b);
        let m = basis.len();

        if m >= n || m >= max_iter {
            beta.push(0.0);
            b_last = if m >= n { 0.0 } else { b };
            converged = m >= n || check(&alpha, &beta, b_last, block_start, breakdowns, k, opts.tol)?;
            break;
        }

        if b <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            // Invariant subspace: close the block.
            beta.push(0.0);
            let block_top = ritz(&alpha[block_start..], &beta[block_start..], 0.0)?
                .values
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let earlier = if block_start > 0 {
                let vals = ritz(&alpha[..block_start], &beta[..block_start], 0.0)?.values;
                kth_largest(vals.into_iter(), k)
            } else {
                None
            };
            breakdowns += 1;
            if let Some(kth) = earlier {
                if block_top <= kth + opts.tol {
                    b_last = 0.0;
                    converged = true;
                    break;
                }
            }
            match fresh_direction(n, &basis, &mut rng) {
                Some(v) => {
                    current = v;
                    block_start = m;
                    continue;
                }
                None => {
                    b_last = 0.0;
                    converged = true;
                    break;
                }
            }
        }

        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        current = std::mem::replace(&mut w, vec![0.0; n]);

        if m >= next_check {
            next_check = m + (m / 10).max(5);
            if check(&alpha, &beta, b, block_start, breakdowns, k, opts.tol)? {
                b_last = b;
                converged = true;
                break;
            }
        }
    }

    let m = basis.len();
    let iterations = m;
    let last_b = b_last;
    let (values, residual_est, vectors) = if opts.want_vectors {
        let (vals, z) = eigen_full(&alpha, &beta)?;
        let order = descending_order(&vals);
        let mut values = Vec::with_capacity(k);
        let mut est = Vec::with_capacity(k);
        let mut vecs = Vec::with_capacity(k);
        for &j in order.iter().take(k) {
            let col = &z[j * m..(j + 1) * m];
            let mut y = vec![0.0; n];
            for (c, v) in col.iter().zip(&basis) {
                axpy(*c, v, &mut y);
            }
            let ny = norm(&y);
            y.iter_mut().for_each(|x| *x /= ny);
            values.push(vals[j]);
            est.push((last_b * col[m - 1]).abs());
            vecs.push(y);
        }
        (values, est, Some(vecs))
    } else {
        let r = ritz(&alpha, &beta, last_b)?;
        let order = descending_order(&r.values);
        let values = order.iter().take(k).map(|&j| r.values[j]).collect();
        let est = order.iter().take(k).map(|&j| r.residuals[j]).collect();
        (values, est, None)
    };

    let residuals = match &vectors {
        Some(vecs) => {
            let mut out = Vec::with_capacity(k);
            let mut av = vec![0.0; n];
            for (v, lam) in vecs.iter().zip(&values) {
                op.apply(v, &mut av);
                axpy(-lam, v, &mut av);
                out.push(norm(&av));
            }
            out
        }
        None => residual_est,
    };
    let converged = converged && residuals.iter().all(|r| *r <= opts.tol.max(1e-11 * scale));

    Ok(SpectralResult::new(
        values,
        vectors,
        residuals,
        iterations,
        converged,
        SolverMethod::Lanczos,
    ))
}

fn check(
    alpha: &[f64],
    beta: &[f64],
    b_last: f64,
    block_start: usize,
    breakdowns: usize,
    k: usize,
    tol: f64,
) -> Result<bool> {
    let r = ritz(alpha, beta, b_last)?;
    if r.values.len() < k {
        return Ok(false);
    }
    let order = descending_order(&r.values);
    if !order.iter().take(k).all(|&j| r.residuals[j] <= tol) {
        return Ok(false);
    }
    if breakdowns == 0 {
        return Ok(true);
    }
    // After a breakdown the open block must have settled its own top value.
    let open = ritz(&alpha[block_start..], &beta[block_start..], b_last)?;
    let top = descending_order(&open.values)[0];
    Ok(open.residuals[top] <= tol)
}
