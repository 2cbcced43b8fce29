//! Entry distributions with exactly controlled tails.
//!
//! [`TailLaw`] is a symmetric mixture of a uniform body on `[-s, s]` and a
//! pure Pareto tail beyond the crossover point `x0`, so that
//! `P(|a| > x) = c * x^(-beta)` holds exactly for every `x >= x0` while the
//! total variance is 1. [`SuperPolyTail`] tabulates the `h` function used by
//! the super-polynomial sparsity regime.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EdgeError, Result};

/// A symmetric law on the real line described through the survival function
/// of its absolute value. Every sampler in the crate goes through
/// [`EntryDistribution::abs_from_survival`], i.e. inverse-CDF sampling.
pub trait EntryDistribution: Send + Sync {
    /// `P(|a| > x)`; equals 1 for `x <= 0`.
    fn survival(&self, x: f64) -> f64;

    /// Inverse of [`survival`](Self::survival): the `x >= 0` with
    /// `P(|a| > x) = v` for `v` in `(0, 1]`.
    fn abs_from_survival(&self, v: f64) -> f64;

    /// `E[a^2 ; |a| < q]`.
    fn truncated_second_moment(&self, q: f64) -> f64;

    /// `E[|a|^k]`, `+inf` when the moment diverges.
    fn abs_moment(&self, k: u32) -> f64;

    /// Signed CDF `P(a <= x)`.
    fn cdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            1.0 - 0.5 * self.survival(x)
        } else {
            0.5 * self.survival(-x)
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64
    where
        Self: Sized,
    {
        let v = 1.0 - rng.random::<f64>();
        let mag = self.abs_from_survival(v);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    }

    /// Draw from the law conditioned on `|a| > q`.
    fn sample_above<R: Rng + ?Sized>(&self, q: f64, rng: &mut R) -> f64
    where
        Self: Sized,
    {
        let s_q = self.survival(q);
        let v = s_q * (1.0 - rng.random::<f64>());
        let mag = self.abs_from_survival(v).max(q);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    }

    /// Draw from the law conditioned on `|a| < q`.
    fn sample_below<R: Rng + ?Sized>(&self, q: f64, rng: &mut R) -> f64
    where
        Self: Sized,
    {
        let s_q = self.survival(q);
        let v = s_q + (1.0 - s_q) * (1.0 - rng.random::<f64>());
        let mut mag = self.abs_from_survival(v);
        if mag >= q {
            // rounding at the boundary only
            mag = q * (1.0 - f64::EPSILON);
        }
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    }
}

/// Symmetric uniform body plus exact Pareto tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub tail_constant: f64,
    pub tail_index: f64,
    pub crossover_point: f64,
    pub body_scale: f64,
}

impl TailLaw {
    /// Build the law with `P(|a| > x) = c x^(-beta)` for `x >= x0` and unit
    /// variance.
    pub fn crossover(c: f64, beta: f64, x0: f64) -> Result<Self> {
        if !(beta > 2.0) || !beta.is_finite() {
            return Err(invalid(format!("tail index must exceed 2, got {beta}")));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(invalid(format!("tail constant must be nonnegative, got {c}")));
        }
        if !(x0 > 0.0) || !x0.is_finite() {
            return Err(invalid(format!("crossover point must be positive, got {x0}")));
        }
        let tail_mass = c * x0.powf(-beta);
        if tail_mass > 1.0 {
            return Err(invalid(format!("tail mass c*x0^-beta = {tail_mass} exceeds 1")));
        }
        let tail_variance = tail_mass * x0 * x0 * beta / (beta - 2.0);
        if tail_variance >= 1.0 || tail_mass >= 1.0 {
            return Err(EdgeError::InfeasibleVariance { tail_variance });
        }
        // (1 - p) s^2 / 3 + tail_variance = 1
        let body_scale = (3.0 * (1.0 - tail_variance) / (1.0 - tail_mass)).sqrt();
        if body_scale > x0 {
            return Err(invalid(format!(
                "body scale {body_scale} exceeds crossover point {x0}; raise x0"
            )));
        }
        Ok(TailLaw {
            tail_constant: c,
            tail_index: beta,
            crossover_point: x0,
            body_scale,
        })
    }

    /// Crossover law with `x0 = max(3, (2 c beta / (beta - 2))^(1/(beta - 2)))`,
    /// which keeps the tail's share of the variance at most one half.
    pub fn with_default_crossover(c: f64, beta: f64) -> Result<Self> {
        if !(beta > 2.0) {
            return Err(invalid(format!("tail index must exceed 2, got {beta}")));
        }
        let needed = (2.0 * c * beta / (beta - 2.0)).powf(1.0 / (beta - 2.0));
        let x0 = if needed.is_finite() { needed.max(3.0) } else { 3.0 };
        Self::crossover(c, beta, x0)
    }

    /// Law for the sparse ensemble with sparsity exponent `mu`: `beta = 2(1 + 1/mu)`.
    pub fn for_sparsity(c: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(invalid(format!("mu must lie in (0, 1], got {mu}")));
        }
        Self::with_default_crossover(c, tail_index_for_mu(mu))
    }

    /// Probability mass of the Pareto branch, `c x0^(-beta)`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_constant * self.crossover_point.powf(-self.tail_index)
    }

    pub fn tail_prob(&self, x: f64) -> f64 {
        self.survival(x)
    }

    pub fn variance(&self) -> f64 {
        self.abs_moment(2)
    }

    /// Density of `a` (signed), used by quadrature oracles.
    pub fn density(&self, x: f64) -> f64 {
        let ax = x.abs();
        let p = self.tail_mass();
        let mut d = 0.0;
        if ax <= self.body_scale {
            d += (1.0 - p) / (2.0 * self.body_scale);
        }
        if ax >= self.crossover_point && p > 0.0 {
            d += 0.5 * self.tail_constant * self.tail_index * ax.powf(-self.tail_index - 1.0);
        }
        d
    }
}

impl EntryDistribution for TailLaw {
    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= self.crossover_point {
            return self.tail_constant * x.powf(-self.tail_index);
        }
        let p = self.tail_mass();
        if x >= self.body_scale {
            p
        } else {
            p + (1.0 - p) * (1.0 - x / self.body_scale)
        }
    }

    fn abs_from_survival(&self, v: f64) -> f64 {
        let p = self.tail_mass();
        if v <= p && p > 0.0 {
            (self.tail_constant / v).powf(1.0 / self.tail_index)
        } else {
            let u = ((1.0 - v) / (1.0 - p)).clamp(0.0, 1.0);
            self.body_scale * u
        }
    }

    fn truncated_second_moment(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        let p = self.tail_mass();
        let s = self.body_scale;
        let b = q.min(s);
        let mut m = (1.0 - p) * b * b * b / (3.0 * s);
        if q > self.crossover_point && p > 0.0 {
            let beta = self.tail_index;
            let c = self.tail_constant;
            m += c * beta / (beta - 2.0) * (self.crossover_point.powf(2.0 - beta) - q.powf(2.0 - beta));
        }
        m
    }

    fn abs_moment(&self, k: u32) -> f64 {
        let kf = k as f64;
        let p = self.tail_mass();
        let body = (1.0 - p) * self.body_scale.powi(k as i32) / (kf + 1.0);
        if p == 0.0 {
            return body;
        }
        if kf >= self.tail_index {
            return f64::INFINITY;
        }
        body + p * self.crossover_point.powi(k as i32) * self.tail_index / (self.tail_index - kf)
    }
}

/// Standard Gaussian entries, the light-tailed reference body.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Gaussian;

impl EntryDistribution for Gaussian {
    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
        }
    }

    fn abs_from_survival(&self, v: f64) -> f64 {
        if v >= 1.0 {
            0.0
        } else {
            std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(v)
        }
    }

    fn truncated_second_moment(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        statrs::function::erf::erf(q / std::f64::consts::SQRT_2)
            - (2.0 / std::f64::consts::PI).sqrt() * q * (-0.5 * q * q).exp()
    }

    fn abs_moment(&self, k: u32) -> f64 {
        // E|Z|^k = 2^(k/2) Gamma((k+1)/2) / sqrt(pi)
        let kf = k as f64;
        2f64.powf(kf / 2.0) * statrs::function::gamma::gamma((kf + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.sample(rand_distr::StandardNormal)
    }
}

/// Entry law selector used by ensembles and configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryLaw {
    Gaussian,
    Crossover(TailLaw),
}

impl From<TailLaw> for EntryLaw {
    fn from(law: TailLaw) -> Self {
        EntryLaw::Crossover(law)
    }
}

macro_rules! delegate {
    ($self:ident, $law:ident => $e:expr) => {
        match $self {
            EntryLaw::Gaussian => {
                let $law = &Gaussian;
                $e
            }
            EntryLaw::Crossover(inner) => {
                let $law = inner;
                $e
            }
        }
    };
}

impl EntryDistribution for EntryLaw {
    fn survival(&self, x: f64) -> f64 {
        delegate!(self, l => l.survival(x))
    }
    fn abs_from_survival(&self, v: f64) -> f64 {
        delegate!(self, l => l.abs_from_survival(v))
    }
    fn truncated_second_moment(&self, q: f64) -> f64 {
        delegate!(self, l => l.truncated_second_moment(q))
    }
    fn abs_moment(&self, k: u32) -> f64 {
        delegate!(self, l => l.abs_moment(k))
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        delegate!(self, l => l.sample(rng))
    }
}

/// `beta = 2 (1 + 1/mu)`.
pub fn tail_index_for_mu(mu: f64) -> f64 {
    2.0 * (1.0 + 1.0 / mu)
}

/// Convenience wrapper matching the operation name used in the docs.
pub fn build_crossover_law(c: f64, beta: f64, x0: f64) -> Result<TailLaw> {
    TailLaw::crossover(c, beta, x0)
}

/// Increasing growth function `g` for the super-polynomial regime.
#[derive(Clone)]
pub enum GrowthFunction {
    /// `g(x) = log log x * log log log x`.
    LogLogTimesLogLogLog,
    /// `g(x) = (log log x)^power`, `power > 1`.
    LogLogPower(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthFunction::LogLogTimesLogLogLog => write!(f, "LogLogTimesLogLogLog"),
            GrowthFunction::LogLogPower(p) => write!(f, "LogLogPower({p})"),
            GrowthFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl GrowthFunction {
    /// Evaluate `g` at `x = exp(log_x)`; working in `log x` keeps `x` up to
    /// `1e300` representable.
    pub fn eval_log(&self, log_x: f64) -> f64 {
        match self {
            GrowthFunction::LogLogTimesLogLogLog => {
                let ll = log_x.ln();
                ll * ll.ln()
            }
            GrowthFunction::LogLogPower(p) => log_x.ln().powf(*p),
            GrowthFunction::Custom(g) => g(log_x.exp()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_log(x.ln())
    }

    /// The two ratios whose limits define admissible growth:
    /// `g(x) / log log x` (must diverge) and `g(x) log log x / log x`
    /// (must vanish).
    pub fn growth_ratios(&self, log_x: f64) -> (f64, f64) {
        let g = self.eval_log(log_x);
        let ll = log_x.ln();
        (g / ll, g * ll / log_x)
    }
}

const TABLE_SIZE: usize = 1024;

/// Tabulated `h` with `h(a * sqrt(log(x)^g(x))) = x`.
#[derive(Debug, Clone)]
pub struct SuperPolyTail {
    pub g: GrowthFunction,
    pub a: f64,
    log_x: Vec<f64>,
    log_phi: Vec<f64>,
}

impl SuperPolyTail {
    /// Default domain: `log x` in `[e, 690]`.
    pub fn new(g: GrowthFunction, a: f64) -> Result<Self> {
        Self::with_domain(g, a, std::f64::consts::E * (1.0 + 1e-12), 690.0)
    }

    pub fn with_domain(g: GrowthFunction, a: f64, log_x_lo: f64, log_x_hi: f64) -> Result<Self> {
        if !(a > 1.0) {
            return Err(invalid(format!("a must exceed 1, got {a}")));
        }
        if !(log_x_lo > 1.0 && log_x_hi > log_x_lo) {
            return Err(invalid("log-domain must satisfy 1 < lo < hi"));
        }
        let mut log_x = Vec::with_capacity(TABLE_SIZE);
        let mut log_phi = Vec::with_capacity(TABLE_SIZE);
        for i in 0..TABLE_SIZE {
            let t = log_x_lo + (log_x_hi - log_x_lo) * i as f64 / (TABLE_SIZE - 1) as f64;
            let lp = log_phi_at(&g, a, t);
            if !lp.is_finite() {
                return Err(invalid(format!("g is not finite at log x = {t}")));
            }
            if let Some(&prev) = log_phi.last() {
                if lp <= prev {
                    return Err(invalid(format!(
                        "a*sqrt(log(x)^g(x)) is not increasing near log x = {t}"
                    )));
                }
            }
            log_x.push(t);
            log_phi.push(lp);
        }
        Ok(SuperPolyTail { g, a, log_x, log_phi })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.log_phi[0].exp(), self.log_phi[TABLE_SIZE - 1].exp())
    }

    /// `h(y)`: the `x` with `a * sqrt(log(x)^g(x)) = y`.
    pub fn h_eval(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(y >= lo && y <= hi) {
            return Err(EdgeError::OutOfRange { value: y, lo, hi });
        }
        let target = y.ln();
        let idx = self.log_phi.partition_point(|&v| v < target);
        let (mut a, mut b) = if idx == 0 {
            (self.log_x[0], self.log_x[0])
        } else {
            (self.log_x[idx - 1], self.log_x[idx.min(TABLE_SIZE - 1)])
        };
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if log_phi_at(&self.g, self.a, mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok((0.5 * (a + b)).exp())
    }

    /// `h^{-1}(x) = a * sqrt(log(x)^g(x))`.
    pub fn h_inverse(&self, x: f64) -> Result<f64> {
        let t = x.ln();
        let (lo, hi) = (self.log_x[0], self.log_x[TABLE_SIZE - 1]);
        if !(t >= lo && t <= hi) {
            return Err(EdgeError::OutOfRange {
                value: x,
                lo: lo.exp(),
                hi: hi.exp(),
            });
        }
        Ok(log_phi_at(&self.g, self.a, t).exp())
    }
}

fn log_phi_at(g: &GrowthFunction, a: f64, log_x: f64) -> f64 {
    a.ln() + 0.5 * g.eval_log(log_x) * log_x.ln()
}
