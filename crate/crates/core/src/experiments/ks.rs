//! Kolmogorov–Smirnov distances that tolerate atoms and ties.

/// 1% critical value of the one-sample statistic for `m` samples.
pub fn ks_critical_1pct(m: usize) -> f64 {
    1.628 / (m as f64).sqrt()
}

/// `sup |F_m - F|` for a law without atoms.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_statistic_with_atoms(samples, &cdf, &cdf)
}

/// `sup |F_m - F|` where `cdf_left(x) = P(X < x)` supplies the left limit,
/// so a sample sitting on an atom is compared on both sides of the jump.
/// Samples need not be sorted; ties are grouped.
pub fn ks_statistic_with_atoms(samples: &[f64], cdf: &dyn Fn(f64) -> f64, cdf_left: &dyn Fn(f64) -> f64) -> f64 {
    let mut s: Vec<f64> = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        let below = i as f64 / m;
        let upto = j as f64 / m;
        d = d.max((cdf(x) - upto).abs()).max((cdf_left(x) - below).abs());
        i = j;
    }
    d
}

/// Two-sample statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn single_sample_at_median() {
        let d = ks_statistic(&[0.0], |x| 0.5 * (1.0 + x.tanh()));
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_samples_pass() {
        let mut rng = crate::seeding::rng_from_seed(4);
        let m = 2000;
        let mut fails = 0;
        for _ in 0..50 {
            let s: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            if ks_statistic(&s, |x| x.clamp(0.0, 1.0)) >= ks_critical_1pct(m) {
                fails += 1;
            }
        }
        assert!(fails <= 3);
    }

    #[test]
    fn location_shift_gap() {
        // Uniform(0,1) shifted by 0.1 against Uniform(0,1): gap 0.1.
        let m = 100_000;
        let s: Vec<f64> = (0..m).map(|i| 0.1 + (i as f64 + 0.5) / m as f64).collect();
        let d = ks_statistic(&s, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.1).abs() < 1e-4);
    }

    #[test]
    fn atom_is_not_penalised() {
        // Half the mass at 0, half uniform on (0, 1).
        let cdf = |x: f64| if x < 0.0 { 0.0 } else { (0.5 + 0.5 * x).min(1.0) };
        let left = |x: f64| if x <= 0.0 { 0.0 } else { (0.5 + 0.5 * x).min(1.0) };
        let m = 10_000;
        let s: Vec<f64> = (0..m)
            .map(|i| {
                if i < m / 2 {
                    0.0
                } else {
                    (i - m / 2) as f64 / (m / 2) as f64
                }
            })
            .collect();
        let d = ks_statistic_with_atoms(&s, &cdf, &left);
        assert!(d < 1e-3, "{d}");
    }

    #[test]
    fn two_sample() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0], &[1.0]), 1.0);
    }
}
