//! Analytic limit objects: the edge map `f`, deformed Fréchet laws, the
//! extreme-entry Poisson intensity, Marchenko–Pastur transforms, `F_alpha`
//! and the covariance edge law.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EdgeError, Result};
use crate::tail_laws::{tail_index_for_mu, SuperPolyTail};

const GL_NODES: usize = 200;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl200() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(GL_NODES))
}

/// `f(x) = x + 1/x` for `x >= 1`, else 2.
pub fn f_bbp(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(EdgeError::Domain(format!("f needs x > 0, got {x}")));
    }
    Ok(if x >= 1.0 { x + 1.0 / x } else { 2.0 })
}

/// Branch of `f^{-1}` with values in `[1, inf)`.
pub fn f_inverse(lambda: f64) -> Result<f64> {
    if !(lambda >= 2.0) {
        return Err(EdgeError::Domain(format!("f^-1 needs lambda >= 2, got {lambda}")));
    }
    Ok((lambda + (lambda * lambda - 4.0).sqrt()) / 2.0)
}

fn check_c_mu(c: f64, mu: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("tail constant c must be positive, got {c}")));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(invalid(format!("mu must lie in (0, 1], got {mu}")));
    }
    Ok(tail_index_for_mu(mu))
}

/// `exp(-c x^{-beta} / 2)` with `beta = 2(1 + 1/mu)`; zero for `x <= 0`.
pub fn frechet_cdf(x: f64, c: f64, mu: f64) -> Result<f64> {
    let beta = check_c_mu(c, mu)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((-0.5 * c * x.powf(-beta)).exp())
}

pub fn frechet_quantile(u: f64, c: f64, mu: f64) -> Result<f64> {
    let beta = check_c_mu(c, mu)?;
    if !(0.0..=1.0).contains(&u) {
        return Err(EdgeError::Domain(format!("quantile level {u} outside [0, 1]")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if u == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-2.0 * u.ln() / c).powf(-1.0 / beta))
}

/// Law of `f(xi)`: zero below 2, an atom of mass `exp(-c/2)` at 2.
pub fn lambda1_cdf(t: f64, c: f64, mu: f64) -> Result<f64> {
    check_c_mu(c, mu)?;
    if t < 2.0 {
        return Ok(0.0);
    }
    frechet_cdf(f_inverse(t)?, c, mu)
}

/// Expected number of extreme entries above `c0`: `(c/2) c0^{-beta}`.
pub fn poisson_expected_count(c0: f64, c: f64, mu: f64) -> Result<f64> {
    let beta = check_c_mu(c, mu)?;
    if !(c0 > 0.0) {
        return Err(EdgeError::Domain(format!("threshold must be positive, got {c0}")));
    }
    Ok(0.5 * c * c0.powf(-beta))
}

/// Largest `k` points of the limiting extreme-entry process, descending.
/// Points are `(2 Gamma_j / c)^{-1/beta}` for the arrival times `Gamma_j`
/// of a unit-rate Poisson process.
pub fn simulate_poisson_top_k<R: Rng + ?Sized>(c: f64, mu: f64, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    let beta = check_c_mu(c, mu)?;
    let mut gamma = 0.0;
    Ok((0..k)
        .map(|_| {
            gamma += rng.sample::<f64, _>(Exp1);
            (2.0 * gamma / c).powf(-1.0 / beta)
        })
        .collect())
}

/// Marchenko–Pastur support `[(1 - sqrt a)^2, (1 + sqrt a)^2]`.
pub fn mp_support(alpha: f64) -> (f64, f64) {
    let s = alpha.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Absolutely continuous part of the Marchenko–Pastur law. For `alpha < 1`
/// it carries mass `alpha`; the rest is an atom at 0.
pub fn mp_density(x: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (a, b) = mp_support(alpha);
    if x <= a || x >= b || x <= 0.0 {
        return Ok(0.0);
    }
    Ok(((b - x) * (x - a)).sqrt() / (2.0 * PI * x))
}

/// `int g(x) rho(x) dx` over the MP support with `x = m + r sin(theta)`, which
/// turns the square-root edges into a smooth integrand.
fn mp_integrate(alpha: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (a, b) = mp_support(alpha);
    let (m, r) = ((a + b) / 2.0, (b - a) / 2.0);
    let (nodes, weights) = gl200();
    let mut s = 0.0;
    for (t, w) in nodes.iter().zip(weights) {
        let theta = FRAC_PI_2 * t;
        let (sn, cs) = theta.sin_cos();
        let x = m + r * sn;
        s += w * r * r * cs * cs / (2.0 * PI * x) * g(x);
    }
    s * FRAC_PI_2
}

/// Total mass of the continuous part, `min(1, alpha)`.
pub fn mp_mass(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(mp_integrate(alpha, |_| 1.0))
}

fn check_outside(z: f64, alpha: f64) -> Result<()> {
    let (_, b) = mp_support(alpha);
    if !(z >= b) {
        return Err(EdgeError::Domain(format!(
            "Stieltjes argument {z} is not above the spectrum edge {b}"
        )));
    }
    Ok(())
}

/// `G(z) = int pi_alpha(dx) / (z - x)` for real `z >= b_alpha`, by quadrature.
pub fn mp_stieltjes(z: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_outside(z, alpha)?;
    let atom = (1.0 - alpha).max(0.0);
    let g = mp_integrate(alpha, |x| 1.0 / (z - x));
    if !g.is_finite() {
        return Err(EdgeError::Quadrature(format!("non-finite transform at z = {z}")));
    }
    Ok(g + atom / z)
}

/// Closed form `(z + 1 - alpha - sqrt((z - a)(z - b))) / (2z)`; kept as an
/// independent check on the quadrature.
pub fn mp_stieltjes_closed(z: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_outside(z, alpha)?;
    let (a, b) = mp_support(alpha);
    Ok((z + 1.0 - alpha - ((z - a) * (z - b)).max(0.0).sqrt()) / (2.0 * z))
}

/// Transform of the companion law `(1/alpha) pi_alpha + (1 - 1/alpha) delta_0`,
/// i.e. the spectrum of `H^T H / L` when `H H^T / L` follows `pi_alpha`.
pub fn mp_companion_stieltjes(z: f64, alpha: f64) -> Result<f64> {
    let g = mp_stieltjes(z, alpha)?;
    Ok(g / alpha + (1.0 - 1.0 / alpha) / z)
}

/// `alpha` and `1/alpha` describe the same problem with `L` and `M` swapped.
fn canonical_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(if alpha < 1.0 { 1.0 / alpha } else { alpha })
}

/// Smallest admissible root, `(1 + sqrt a) / sqrt(1 + a)`.
pub fn f_alpha_edge(alpha: f64) -> Result<f64> {
    let a = canonical_alpha(alpha)?;
    Ok((1.0 + a.sqrt()) / (1.0 + a).sqrt())
}

/// Left side of the defining equation,
/// `z^2 (1+a)^2 G(w) G~(w)` with `w = (1+a) z^2`; decreasing in `z`.
pub fn f_alpha_lhs(z: f64, alpha: f64) -> Result<f64> {
    let a = canonical_alpha(alpha)?;
    // Rounding can put (1+a) e^2 one ulp under the edge.
    let w = ((1.0 + a) * z * z).max(mp_support(a).1);
    let g = mp_stieltjes(w, a)?;
    let gc = mp_companion_stieltjes(w, a)?;
    Ok(z * z * (1.0 + a).powi(2) * g * gc)
}

/// Threshold below which `F_alpha` sits at its edge value.
pub fn tau_alpha(alpha: f64) -> Result<f64> {
    let e = f_alpha_edge(alpha)?;
    Ok(1.0 / f_alpha_lhs(e, alpha)?.sqrt())
}

/// `|lhs(z) - 1/x^2|`.
pub fn f_alpha_residual(z: f64, x: f64, alpha: f64) -> Result<f64> {
    Ok((f_alpha_lhs(z, alpha)? - 1.0 / (x * x)).abs())
}

/// `F_alpha(x)`: the root `z` of `lhs(z) = 1/x^2` above the edge, or the edge
/// value when `x <= tau_alpha`.
pub fn f_alpha(x: f64, alpha: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(EdgeError::Domain(format!("F_alpha needs x > 0, got {x}")));
    }
    let e = f_alpha_edge(alpha)?;
    let target = 1.0 / (x * x);
    if f_alpha_lhs(e, alpha)? <= target {
        return Ok(e);
    }
    let mut lo = e * (1.0 + 1e-12);
    let mut hi = (e + 1.0).max(2.0 * x + 2.0);
    let mut doublings = 0;
    while f_alpha_lhs(hi, alpha)? > target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(EdgeError::Bracket(format!("no upper bracket for x = {x}")));
        }
    }
    if f_alpha_lhs(lo, alpha)? < target {
        // Root within 1e-12 relative of the edge.
        return Ok(e);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_alpha_lhs(mid, alpha)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Explicit inverse of `F_alpha` above the edge: `x = lhs(z)^{-1/2}`.
pub fn f_alpha_inverse(z: f64, alpha: f64) -> Result<f64> {
    let e = f_alpha_edge(alpha)?;
    if !(z >= e) {
        return Err(EdgeError::Domain(format!("F_alpha takes values >= {e}, got {z}")));
    }
    Ok(1.0 / f_alpha_lhs(z, alpha)?.sqrt())
}

fn check_c_alpha(c: f64, alpha: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("tail constant c must be positive, got {c}")));
    }
    check_alpha(alpha)
}

/// `P(xi_{c,alpha} <= x) = exp(-c alpha x^{-4} / (1+alpha)^2)`.
pub fn covariance_xi_cdf(x: f64, c: f64, alpha: f64) -> Result<f64> {
    check_c_alpha(c, alpha)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((-c * alpha * x.powi(-4) / (1.0 + alpha).powi(2)).exp())
}

/// Law of `(1+alpha) F_alpha(xi)^2`, the limit of the top covariance
/// eigenvalue. Atom at `(1 + sqrt alpha)^2` of mass `P(xi <= tau_alpha)`.
pub fn covariance_edge_cdf(t: f64, c: f64, alpha: f64) -> Result<f64> {
    check_c_alpha(c, alpha)?;
    let (_, b) = mp_support(alpha);
    if t < b {
        return Ok(0.0);
    }
    let z = (t / (1.0 + alpha)).sqrt().max(f_alpha_edge(alpha)?);
    let x = f_alpha_inverse(z, alpha)?;
    covariance_xi_cdf(x, c, alpha)
}

/// Limit of the top eigenvalue in the super-polynomial sparsity regime.
pub fn super_poly_limit(sp: &SuperPolyTail) -> Result<f64> {
    f_bbp(sp.a)
}

/// Analytic laws with point evaluation and quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitLaw {
    /// `xi`: the largest extreme entry.
    FrechetMu { c: f64, mu: f64 },
    /// `f(xi)`: the top eigenvalue.
    PushforwardF { c: f64, mu: f64 },
    /// The largest point of the extreme-entry process; same law as
    /// `FrechetMu`, exposed for its counting function.
    PoissonIntensity { c: f64, mu: f64 },
    /// `(1+alpha) F_alpha(xi_{c,alpha})^2`.
    CovarianceEdge { c: f64, alpha: f64 },
}

impl LimitLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LimitLaw::FrechetMu { c, mu } | LimitLaw::PushforwardF { c, mu } | LimitLaw::PoissonIntensity { c, mu } => {
                check_c_mu(c, mu).map(|_| ())
            }
            LimitLaw::CovarianceEdge { c, alpha } => check_c_alpha(c, alpha),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match *self {
            LimitLaw::FrechetMu { c, mu } | LimitLaw::PoissonIntensity { c, mu } => frechet_cdf(x, c, mu),
            LimitLaw::PushforwardF { c, mu } => lambda1_cdf(x, c, mu),
            LimitLaw::CovarianceEdge { c, alpha } => covariance_edge_cdf(x, c, alpha),
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> Result<f64> {
        match self.atom()? {
            Some((loc, mass)) if x == loc => Ok(self.cdf(x)? - mass),
            _ => self.cdf(x),
        }
    }

    /// Location and mass of the point mass, if any.
    pub fn atom(&self) -> Result<Option<(f64, f64)>> {
        match *self {
            LimitLaw::FrechetMu { c, mu } | LimitLaw::PoissonIntensity { c, mu } => check_c_mu(c, mu).map(|_| None),
            LimitLaw::PushforwardF { c, mu } => Ok(Some((2.0, frechet_cdf(1.0, c, mu)?))),
            LimitLaw::CovarianceEdge { c, alpha } => {
                let (_, b) = mp_support(alpha);
                Ok(Some((b, covariance_xi_cdf(tau_alpha(alpha)?, c, alpha)?)))
            }
        }
    }

    /// Generalised inverse `inf { x : cdf(x) >= u }`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(EdgeError::Domain(format!("quantile level {u} outside [0, 1]")));
        }
        match *self {
            LimitLaw::FrechetMu { c, mu } | LimitLaw::PoissonIntensity { c, mu } => frechet_quantile(u, c, mu),
            LimitLaw::PushforwardF { c, mu } => {
                let xi = frechet_quantile(u, c, mu)?;
                if xi <= 1.0 {
                    Ok(2.0)
                } else if xi.is_infinite() {
                    Ok(f64::INFINITY)
                } else {
                    f_bbp(xi)
                }
            }
            LimitLaw::CovarianceEdge { c, alpha } => {
                check_c_alpha(c, alpha)?;
                if u == 1.0 {
                    return Ok(f64::INFINITY);
                }
                let (_, b) = mp_support(alpha);
                if u == 0.0 {
                    return Ok(b);
                }
                let xi = (-(1.0 + alpha).powi(2) * u.ln() / (c * alpha)).powf(-0.25);
                let z = f_alpha(xi, alpha)?;
                Ok(((1.0 + alpha) * z * z).max(b))
            }
        }
    }

    /// Expected number of points above `x` (intensity laws only).
    pub fn expected_count(&self, x: f64) -> Result<f64> {
        match *self {
            LimitLaw::PoissonIntensity { c, mu } | LimitLaw::FrechetMu { c, mu } => poisson_expected_count(x, c, mu),
            _ => Err(EdgeError::Domain(
                "expected counts exist only for the intensity law".into(),
            )),
        }
    }
}
