//! Top of the spectrum: eigensolvers, eigenvector localisation and the
//! matrix parameters used to judge when small-entry matrices behave like
//! Gaussian ones.

mod lanczos;
pub mod tridiag;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use lanczos::{lanczos_top_k, LanczosOptions};

use crate::ensembles::{CsrMatrix, EnsembleSample};
use crate::error::{EdgeError, Result};
use crate::seeding::substream;

/// Matrices at or below this side length may be solved densely.
pub const DENSE_LIMIT: usize = 2048;

/// Gaps below this (relative to the spectral scale) are flagged as ties.
const TIE_RELATIVE_GAP: f64 = 1e-10;

/// A symmetric operator known only through products.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        y.iter_mut().for_each(|v| *v = 0.0);
        // Column-major storage: accumulate column by column.
        for (j, xj) in x.iter().enumerate() {
            if *xj == 0.0 {
                continue;
            }
            let col = &self.as_slice()[j * n..(j + 1) * n];
            for (yi, a) in y.iter_mut().zip(col) {
                *yi += a * xj;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Lanczos,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    /// `||A v - lambda v||` when vectors were formed, otherwise the Lanczos
    /// estimate.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub method: SolverMethod,
    /// Smallest gap between consecutive returned eigenvalues.
    pub min_gap: f64,
    /// Two returned eigenvalues coincide numerically.
    pub near_degenerate: bool,
}

impl SpectralResult {
    pub fn new(
        eigenvalues: Vec<f64>,
        eigenvectors: Option<Vec<Vec<f64>>>,
        residuals: Vec<f64>,
        iterations: usize,
        converged: bool,
        method: SolverMethod,
    ) -> Self {
        let min_gap = eigenvalues
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        let scale = eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        SpectralResult {
            near_degenerate: min_gap < TIE_RELATIVE_GAP * scale,
            eigenvalues,
            eigenvectors,
            residuals,
            iterations,
            converged,
            method,
            min_gap,
        }
    }

    pub fn top(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn require_square(sample: &EnsembleSample) -> Result<()> {
    if !sample.is_symmetric() || sample.rows != sample.cols {
        return Err(EdgeError::Dimension(format!(
            "eigensolver needs a symmetric sample, got {}x{} {:?}",
            sample.rows, sample.cols, sample.kind
        )));
    }
    Ok(())
}

/// Top-`k` eigenvalues of a symmetric sample with default options.
pub fn top_k_eigs(sample: &EnsembleSample, k: usize, tol: f64) -> Result<SpectralResult> {
    let opts = LanczosOptions {
        tol,
        seed: sample.seed,
        ..LanczosOptions::default()
    };
    top_k_eigs_with(sample, k, &opts)
}

/// Lanczos on the sparse operator; falls back to a dense solve for small
/// matrices when Lanczos does not converge.
pub fn top_k_eigs_with(sample: &EnsembleSample, k: usize, opts: &LanczosOptions) -> Result<SpectralResult> {
    require_square(sample)?;
    let n = sample.dim();
    if k == 0 || k > n {
        return Err(EdgeError::Dimension(format!("k = {k} must lie in 1..={n}")));
    }
    let csr = sample.to_csr();
    let result = lanczos_top_k(&csr, k, opts)?;
    if !result.converged && n <= DENSE_LIMIT {
        return dense_top_k(&sample.to_dense(), k, opts.want_vectors);
    }
    Ok(result)
}

/// Reference solver: full symmetric eigendecomposition.
pub fn dense_top_k(matrix: &DMatrix<f64>, k: usize, want_vectors: bool) -> Result<SpectralResult> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(EdgeError::Dimension(format!("{}x{} is not square", n, matrix.ncols())));
    }
    if k == 0 || k > n {
        return Err(EdgeError::Dimension(format!("k = {k} must lie in 1..={n}")));
    }
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().take(k).map(|&j| eig.eigenvalues[j]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .take(k)
        .map(|&j| eig.eigenvectors.column(j).iter().copied().collect())
        .collect();
    let mut residuals = Vec::with_capacity(k);
    let mut av = vec![0.0; n];
    for (v, lam) in vectors.iter().zip(&values) {
        matrix.apply(v, &mut av);
        let r: f64 = av.iter().zip(v).map(|(a, x)| (a - lam * x).powi(2)).sum();
        residuals.push(r.sqrt());
    }
    Ok(SpectralResult::new(
        values,
        want_vectors.then_some(vectors),
        residuals,
        n,
        true,
        SolverMethod::Dense,
    ))
}

/// `||B||` by power iteration, stopping when the estimate changes by less
/// than `tol` relatively.
pub fn operator_norm<A: LinearOperator + ?Sized>(op: &A, tol: f64, seed: u64) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = substream(seed, 0x0b_5e55);
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut est = 0.0f64;
    for _ in 0..100_000 {
        op.apply(&x, &mut y);
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ny == 0.0 {
            return 0.0;
        }
        let done = (ny - est).abs() <= tol * ny;
        est = ny;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
        if done {
            break;
        }
    }
    est
}

/// `|v_i + sign v_j| / sqrt(2)`: overlap of `v` with `(e_i + sign e_j)/sqrt(2)`.
pub fn overlap(v: &[f64], i: usize, j: usize, sign: f64) -> Result<f64> {
    let n = v.len();
    for idx in [i, j] {
        if idx >= n {
            return Err(EdgeError::Index { index: idx, len: n });
        }
    }
    if i == j {
        return Err(EdgeError::Domain(format!(
            "overlap needs distinct indices, got {i} twice"
        )));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(EdgeError::Domain(format!("sign must be +1 or -1, got {sign}")));
    }
    Ok((v[i] + sign * v[j]).abs() / std::f64::consts::SQRT_2)
}

/// Squared overlap predicted for an outlier eigenvector at `lambda > 2`.
pub fn localization_target(lambda: f64) -> Result<f64> {
    if !(lambda > 2.0) {
        return Err(EdgeError::Domain(format!(
            "localization needs lambda > 2, got {lambda}"
        )));
    }
    let r = lambda + (lambda * lambda - 4.0).sqrt();
    Ok(1.0 - 4.0 / (r * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationOutcome {
    pub holds: bool,
    pub site: (usize, usize),
    pub sign: f64,
    pub overlap_sq: f64,
    pub target: f64,
    pub linf: f64,
}

/// Is the best two-site squared overlap of `v` within `target * [1-eps, 1+eps]`?
/// The maximising pair is always the two largest coordinates in modulus.
pub fn localization_event(v: &[f64], lambda: f64, eps: f64) -> Result<LocalizationOutcome> {
    let target = localization_target(lambda)?;
    if !(eps > 0.0) {
        return Err(EdgeError::Domain(format!("eps must be positive, got {eps}")));
    }
    if v.len() < 2 {
        return Err(EdgeError::Dimension(
            "localization needs at least two coordinates".into(),
        ));
    }
    let (mut i, mut j) = (0usize, 1usize);
    if v[j].abs() > v[i].abs() {
        std::mem::swap(&mut i, &mut j);
    }
    for (k, x) in v.iter().enumerate().skip(2) {
        if x.abs() > v[i].abs() {
            j = i;
            i = k;
        } else if x.abs() > v[j].abs() {
            j = k;
        }
    }
    let sign = if v[i] * v[j] < 0.0 { -1.0 } else { 1.0 };
    let ov = overlap(v, i, j, sign)?;
    let overlap_sq = ov * ov;
    Ok(LocalizationOutcome {
        holds: (overlap_sq - target).abs() <= eps * target,
        site: (i, j),
        sign,
        overlap_sq,
        target,
        linf: v[i].abs(),
    })
}

/// Variance profiles with closed-form matrix parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum VarianceProfile {
    /// Entries of variance `1/n`; `entry_bound` is `None` for unbounded laws.
    DenseWigner { n: usize, entry_bound: Option<f64> },
    SparseWigner {
        n: usize,
        p_n: f64,
        entry_bound: Option<f64>,
    },
    WeightedRegular {
        n: usize,
        degree: usize,
        entry_bound: Option<f64>,
    },
    /// The small part of the split, bounded by `(log n)^{-exponent}`.
    SmallPart { n: usize, exponent: f64 },
    /// Symmetrised `L x M` covariance factor with variance `1/L` per entry.
    SymmetrizedCovariance {
        l: usize,
        m: usize,
        entry_bound: Option<f64>,
    },
}

impl VarianceProfile {
    /// Parse a profile name with a dimension, for command-line use.
    pub fn by_name(name: &str, n: usize) -> Result<Self> {
        match name {
            "dense_wigner" => Ok(VarianceProfile::DenseWigner { n, entry_bound: None }),
            "small_part" => Ok(VarianceProfile::SmallPart { n, exponent: 5.0 }),
            other => Err(EdgeError::UnsupportedProfile(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvhParameters {
    /// `||E X^2||^{1/2}`.
    pub sigma: f64,
    /// Largest entry standard deviation.
    pub sigma_star: f64,
    /// `||Cov(X)||^{1/2}` over the vectorised entries.
    pub v: f64,
    /// Almost-sure entry bound (infinite for unbounded laws).
    pub r: f64,
    /// `(log d)^2 R`; small values mean Gaussian comparison applies.
    pub gate: f64,
}

pub fn bvh_parameters(profile: &VarianceProfile) -> Result<BvhParameters> {
    let bound = |b: Option<f64>| b.unwrap_or(f64::INFINITY);
    // Independent entries up to symmetry: the covariance of vec(X) pairs
    // (i,j) with (j,i), so off-diagonal sites contribute 2 var.
    let (d, row_var, var_off, var_diag, r) = match *profile {
        VarianceProfile::DenseWigner { n, entry_bound } => {
            check_dim(n)?;
            let var = 1.0 / n as f64;
            (n, n as f64 * var, var, var, bound(entry_bound))
        }
        VarianceProfile::SparseWigner { n, p_n, entry_bound } => {
            check_dim(n)?;
            if !(p_n > 0.0 && p_n <= n as f64) {
                return Err(EdgeError::InvalidParameter(format!("p_n = {p_n} outside (0, {n}]")));
            }
            let var = 1.0 / n as f64;
            (n, n as f64 * var, var, var, bound(entry_bound))
        }
        VarianceProfile::WeightedRegular { n, degree, entry_bound } => {
            check_dim(n)?;
            if degree == 0 || degree > n {
                return Err(EdgeError::InvalidParameter(format!("degree {degree} outside 1..={n}")));
            }
            let var = 1.0 / degree as f64;
            (n, degree as f64 * var, var, var, bound(entry_bound))
        }
        VarianceProfile::SmallPart { n, exponent } => {
            check_dim(n)?;
            if n < 3 {
                return Err(EdgeError::UnsupportedProfile(format!(
                    "small part needs n >= 3, got {n}"
                )));
            }
            let var = 1.0 / n as f64;
            (n, n as f64 * var, var, var, (n as f64).ln().powf(-exponent))
        }
        VarianceProfile::SymmetrizedCovariance { l, m, entry_bound } => {
            check_dim(l)?;
            check_dim(m)?;
            let var = 1.0 / l as f64;
            let widest = l.max(m) as f64 * var;
            (l + m, widest, var, 0.0, bound(entry_bound))
        }
    };
    let sigma = row_var.sqrt();
    let sigma_star = var_off.max(var_diag).sqrt();
    let v = (2.0 * var_off).max(var_diag).sqrt();
    let gate = (d as f64).ln().powi(2) * r;
    Ok(BvhParameters {
        sigma,
        sigma_star,
        v,
        r,
        gate,
    })
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(EdgeError::InvalidParameter("dimension must be positive".into()));
    }
    Ok(())
}
