//! Resampling split `Xi = Xi^S + Xi^L + Xi^N` and the cut of the large part.
//!
//! Sites are first thinned by the sparsity mask, then labelled small (`S`)
//! with probability `P(|a| < Q)` or large (`L`) otherwise. Large sites draw
//! from the law conditioned above `Q`; every kept site draws an independent
//! small value conditioned below `Q`, and the compensator cancels the small
//! value at large sites.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleKind, EnsembleSample, Triplet};
use crate::error::{invalid, Result};
use crate::seeding::rng_from_seed;
use crate::tail_laws::EntryDistribution;

pub const DEFAULT_THRESHOLD_EXPONENT: f64 = 5.0;
pub const DEFAULT_CUT_LEVEL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    S,
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Exponent `e` in `Q_n = sqrt(p_n) (log n)^-e`.
    pub threshold_exponent: f64,
    /// Replaces `Q_n` (in raw entry units) when set; recorded in the split.
    pub threshold_override: Option<f64>,
    /// Cut level `c` for `Xi^{L,>=c}` / `Xi^{L,<c}`; `None` skips the cut.
    pub cut_level: Option<f64>,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            threshold_exponent: DEFAULT_THRESHOLD_EXPONENT,
            threshold_override: None,
            cut_level: Some(DEFAULT_CUT_LEVEL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPair {
    pub level: f64,
    pub above: EnsembleSample,
    pub below: EnsembleSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSplit {
    /// Threshold in raw entry units.
    pub q: f64,
    /// Threshold in matrix units, `q * scale`; every small-part entry is below it.
    pub entry_bound: f64,
    pub threshold_overridden: bool,
    pub labels: Vec<((usize, usize), Label)>,
    pub small_part: EnsembleSample,
    pub large_part: EnsembleSample,
    pub compensator: EnsembleSample,
    pub cut: Option<CutPair>,
}

impl LabeledSplit {
    pub fn large_count(&self) -> usize {
        self.labels.iter().filter(|(_, l)| *l == Label::L).count()
    }

    /// `Xi^S + Xi^L + Xi^N`, one triplet per kept site.
    pub fn reassemble(&self) -> EnsembleSample {
        let mut out = self.small_part.clone();
        let large = self.large_part.value_map();
        let comp = self.compensator.value_map();
        for t in out.entries.iter_mut() {
            let key = (t.row, t.col);
            if let (Some(l), Some(c)) = (large.get(&key), comp.get(&key)) {
                t.value = t.value + c + l;
            }
        }
        out
    }
}

/// `Q_n = sqrt(p_n) (log n)^-exponent`.
pub fn threshold(p_n: f64, n: usize, exponent: f64) -> f64 {
    p_n.sqrt() * (n as f64).ln().powf(-exponent)
}

/// Run the six-step resampling for the diluted Wigner ensemble.
pub fn split_sample<D: EntryDistribution>(
    n: usize,
    p_n: f64,
    law: &D,
    seed: u64,
    opts: SplitOptions,
) -> Result<LabeledSplit> {
    if n < 2 {
        return Err(invalid("split needs n >= 2"));
    }
    if !(p_n > 0.0 && p_n <= n as f64) {
        return Err(invalid(format!("p_n must lie in (0, n], got {p_n}")));
    }
    let mut rng = rng_from_seed(seed);
    let keep = p_n / n as f64;
    let dense = p_n >= n as f64;
    // step 1: sparsity mask
    let mut sites = Vec::new();
    for i in 0..n {
        for j in i..n {
            if dense || rng.random::<f64>() < keep {
                sites.push((i, j));
            }
        }
    }
    let q = opts
        .threshold_override
        .unwrap_or_else(|| threshold(p_n, n, opts.threshold_exponent));
    let scale = 1.0 / p_n.sqrt();
    let kind = if dense {
        EnsembleKind::DenseWigner
    } else {
        EnsembleKind::SparseWigner
    };
    split_sites(&sites, (n, n), kind, scale, q, law, &mut rng, seed, opts)
}

/// Directed split of a covariance factor: all `L*M` sites, threshold
/// `Q_N = sqrt(N) (log N)^-exponent` and normalisation `1/sqrt(N)`.
pub fn split_covariance<D: EntryDistribution>(
    l: usize,
    m: usize,
    law: &D,
    seed: u64,
    opts: SplitOptions,
) -> Result<LabeledSplit> {
    if l == 0 || m == 0 {
        return Err(invalid("covariance dimensions must be positive"));
    }
    let n = l + m;
    let mut rng = rng_from_seed(seed);
    let sites: Vec<(usize, usize)> = (0..l).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let q = opts
        .threshold_override
        .unwrap_or_else(|| threshold(n as f64, n, opts.threshold_exponent));
    let scale = 1.0 / (n as f64).sqrt();
    split_sites(
        &sites,
        (l, m),
        EnsembleKind::CovarianceFactor,
        scale,
        q,
        law,
        &mut rng,
        seed,
        opts,
    )
}

#[allow(clippy::too_many_arguments)]
fn split_sites<D: EntryDistribution, R: Rng + ?Sized>(
    sites: &[(usize, usize)],
    shape: (usize, usize),
    kind: EnsembleKind,
    scale: f64,
    q: f64,
    law: &D,
    rng: &mut R,
    seed: u64,
    opts: SplitOptions,
) -> Result<LabeledSplit> {
    if !(q > 0.0) {
        return Err(invalid(format!("threshold must be positive, got {q}")));
    }
    let p_small = 1.0 - law.survival(q);
    // step 2: labels
    let labels: Vec<((usize, usize), Label)> = sites
        .iter()
        .map(|&s| {
            let label = if rng.random::<f64>() < p_small {
                Label::S
            } else {
                Label::L
            };
            (s, label)
        })
        .collect();
    // steps 3-4: large draws at L sites
    let mut large = Vec::new();
    for &((i, j), label) in &labels {
        if label == Label::L {
            large.push(Triplet::new(i, j, law.sample_above(q, rng) * scale));
        }
    }
    // step 5: small draws at every kept site; step 6: compensator
    let mut small = Vec::with_capacity(sites.len());
    let mut comp = Vec::new();
    for &((i, j), label) in &labels {
        let v = law.sample_below(q, rng) * scale;
        small.push(Triplet::new(i, j, v));
        if label == Label::L {
            comp.push(Triplet::new(i, j, -v));
        }
    }
    let wrap = |entries: Vec<Triplet>| EnsembleSample {
        rows: shape.0,
        cols: shape.1,
        entries,
        kind,
        scale,
        seed,
    };
    let large_part = wrap(large);
    let cut = match opts.cut_level {
        Some(level) => Some(cut_large_part(&large_part, level)?),
        None => None,
    };
    Ok(LabeledSplit {
        q,
        entry_bound: q * scale,
        threshold_overridden: opts.threshold_override.is_some(),
        labels,
        small_part: wrap(small),
        compensator: wrap(comp),
        large_part,
        cut,
    })
}

/// `Xi^{L,>=c}` keeps `|x| >= c`, `Xi^{L,<c}` the rest, so the two sum to
/// `Xi^L` exactly.
pub fn cut_large_part(large: &EnsembleSample, level: f64) -> Result<CutPair> {
    if !(level >= 0.0) {
        return Err(invalid(format!("cut level must be nonnegative, got {level}")));
    }
    let (above, below): (Vec<Triplet>, Vec<Triplet>) = large.entries.iter().partition(|t| t.value.abs() >= level);
    let mut a = large.clone();
    a.entries = above;
    let mut b = large.clone();
    b.entries = below;
    Ok(CutPair {
        level,
        above: a,
        below: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructuralReport {
    /// Diagonal sites with `|x| > threshold`.
    pub large_diagonal: usize,
    /// Rows holding at least two off-diagonal entries with `|x| > threshold`.
    pub rows_with_two_large: usize,
    /// Stored sites with `|x| > delta`.
    pub entries_above_delta: usize,
}

impl StructuralReport {
    pub fn clean(&self) -> bool {
        self.large_diagonal == 0 && self.rows_with_two_large == 0
    }
}

/// Counts of the three structural events, with `threshold = (log n)^-5` by default.
pub fn structural_check(sample: &EnsembleSample, threshold: f64, delta: f64) -> StructuralReport {
    let mut per_row = vec![0usize; sample.rows.max(sample.cols)];
    let mut rep = StructuralReport::default();
    for t in &sample.entries {
        let a = t.value.abs();
        if a > delta {
            rep.entries_above_delta += 1;
        }
        if a <= threshold {
            continue;
        }
        if t.row == t.col && sample.is_symmetric() {
            rep.large_diagonal += 1;
            continue;
        }
        per_row[t.row] += 1;
        if sample.is_symmetric() {
            per_row[t.col] += 1;
        }
    }
    rep.rows_with_two_large = per_row.iter().filter(|&&c| c >= 2).count();
    rep
}

pub fn default_structural_threshold(n: usize) -> f64 {
    (n as f64).ln().powf(-DEFAULT_THRESHOLD_EXPONENT)
}

/// Absolute values of stored entries with `|x| >= c0`, descending.
pub fn extreme_entries(sample: &EnsembleSample, c0: f64) -> Result<Vec<f64>> {
    if !(c0 > 0.0) {
        return Err(invalid(format!("c0 must be positive, got {c0}")));
    }
    let mut out: Vec<f64> = sample
        .entries
        .iter()
        .map(|t| t.value.abs())
        .filter(|&a| a >= c0)
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Exact finite-`n` law of the largest absolute entry of the diluted
/// ensemble: `P(T1 <= x) = (1 - (p_n/n) P(|a| > x sqrt(p_n)))^(n(n+1)/2)`.
pub fn t1_exact_cdf<D: EntryDistribution>(x: f64, n: usize, p_n: f64, law: &D) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let sites = (n as f64) * (n as f64 + 1.0) / 2.0;
    let q = (p_n / n as f64) * law.survival(x * p_n.sqrt());
    (sites * (-q).ln_1p()).exp()
}

/// Finite-`n` expected number of upper-triangle entries with `|x| > c0`.
pub fn exact_expected_count<D: EntryDistribution>(c0: f64, n: usize, p_n: f64, law: &D) -> f64 {
    let sites = (n as f64) * (n as f64 + 1.0) / 2.0;
    sites * (p_n / n as f64) * law.survival(c0 * p_n.sqrt())
}
