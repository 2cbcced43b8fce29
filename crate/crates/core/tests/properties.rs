use edgelab::decomposition::{split_sample, SplitOptions};
use edgelab::ensembles::{sample_sparse_wigner, CsrMatrix, EnsembleSample, Triplet};
use edgelab::experiments::{ks_statistic, ks_statistic_with_atoms, ks_two_sample};
use edgelab::io::{read_matrix_market, write_matrix_market};
use edgelab::limit_laws::{
    f_alpha, f_alpha_edge, f_bbp, f_inverse, frechet_cdf, frechet_quantile, lambda1_cdf, tau_alpha, LimitLaw,
};
use edgelab::report::format_number;
use edgelab::seeding::trial_seed;
use edgelab::spectral::{dense_top_k, lanczos_top_k, localization_target, LanczosOptions};
use edgelab::tail_laws::{EntryDistribution, TailLaw};
use proptest::prelude::*;

fn small_symmetric() -> impl Strategy<Value = EnsembleSample> {
    (2usize..40).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, -3.0f64..3.0), 0..(3 * n)).prop_map(move |ts| {
            EnsembleSample::from_symmetric_triplets(n, ts.into_iter().map(|(i, j, v)| Triplet::new(i, j, v))).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_is_monotone_and_exact_in_tail(c in 0.2f64..2.0, mu in 0.2f64..1.0, x in 0.0f64..50.0, dx in 0.0f64..5.0) {
        let beta = 2.0 * (1.0 + 1.0 / mu);
        let law = TailLaw::with_default_crossover(c, beta).unwrap();
        prop_assert!(law.survival(x + dx) <= law.survival(x));
        let cdf = law.cdf(x);
        prop_assert!((0.0..=1.0).contains(&cdf));
        let y = law.crossover_point + x;
        let exact = c * y.powf(-beta);
        prop_assert!((law.survival(y) - exact).abs() <= 1e-12 * exact.max(1e-300));
    }

    #[test]
    fn f_is_at_least_two_and_inverts(x in 1.0f64..100.0) {
        let lam = f_bbp(x).unwrap();
        prop_assert!(lam >= 2.0);
        prop_assert!((f_inverse(lam).unwrap() - x).abs() < 1e-9 * x);
    }

    #[test]
    fn frechet_quantile_inverts_cdf(u in 0.01f64..0.99, c in 0.5f64..10.0, mu in 0.2f64..1.0) {
        let x = frechet_quantile(u, c, mu).unwrap();
        prop_assert!((frechet_cdf(x, c, mu).unwrap() - u).abs() < 1e-10);
    }

    #[test]
    fn lambda1_cdf_is_monotone_with_atom_at_two(c in 0.5f64..10.0, t in 2.0f64..8.0, dt in 0.0f64..2.0) {
        let a = lambda1_cdf(t, c, 1.0).unwrap();
        let b = lambda1_cdf(t + dt, c, 1.0).unwrap();
        prop_assert!(a <= b + 1e-15);
        prop_assert_eq!(lambda1_cdf(1.999, c, 1.0).unwrap(), 0.0);
        let law = LimitLaw::PushforwardF { c, mu: 1.0 };
        let (loc, mass) = law.atom().unwrap().unwrap();
        prop_assert_eq!(loc, 2.0);
        prop_assert!((law.cdf(2.0).unwrap() - mass).abs() < 1e-15);
        prop_assert_eq!(law.cdf_left(2.0).unwrap(), 0.0);
    }

    #[test]
    fn f_alpha_is_increasing_above_threshold(alpha in 1.0f64..6.0, x in 0.0f64..4.0, dx in 0.01f64..1.0) {
        let tau = tau_alpha(alpha).unwrap();
        let edge = f_alpha_edge(alpha).unwrap();
        let x = tau + x;
        let z1 = f_alpha(x, alpha).unwrap();
        let z2 = f_alpha(x + dx, alpha).unwrap();
        prop_assert!(z1 >= edge * (1.0 - 1e-12));
        prop_assert!(z2 > z1);
        prop_assert_eq!(f_alpha(tau * 0.9, alpha).unwrap(), edge);
    }

    #[test]
    fn localization_target_in_unit_interval(lam in 2.0001f64..50.0, dl in 0.001f64..1.0) {
        let t = localization_target(lam).unwrap();
        prop_assert!(t > 0.0 && t < 1.0);
        prop_assert!(localization_target(lam + dl).unwrap() > t);
    }

    #[test]
    fn ks_is_a_distance(xs in prop::collection::vec(-5.0f64..5.0, 1..200), ys in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let cdf = |x: f64| 0.5 * (1.0 + (x / 2.0).tanh());
        let d = ks_statistic(&xs, cdf);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(ks_statistic_with_atoms(&xs, &cdf, &cdf), d);
        let d2 = ks_two_sample(&xs, &ys);
        prop_assert!((0.0..=1.0).contains(&d2));
        prop_assert_eq!(d2, ks_two_sample(&ys, &xs));
        prop_assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn dense_mirror_is_symmetric(s in small_symmetric()) {
        let d = s.to_dense();
        prop_assert_eq!(d.transpose(), d);
    }

    #[test]
    fn matrix_market_round_trip(s in small_symmetric()) {
        let mut buf = Vec::new();
        write_matrix_market(&s, &mut buf).unwrap();
        let back = read_matrix_market(buf.as_slice()).unwrap();
        prop_assert_eq!(back.to_dense(), s.to_dense());
    }

    #[test]
    fn lanczos_matches_dense_and_is_sorted(s in small_symmetric(), k in 1usize..5, seed in any::<u64>()) {
        let k = k.min(s.dim());
        let opts = LanczosOptions { tol: 1e-12, seed, ..LanczosOptions::default() };
        let r = lanczos_top_k(&CsrMatrix::from_sample(&s), k, &opts).unwrap();
        let d = dense_top_k(&s.to_dense(), k, false).unwrap();
        prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let scale = d.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in r.eigenvalues.iter().zip(&d.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn split_reassembles_and_bounds_small_part(seed in any::<u64>(), n in 20usize..80, mu in 0.3f64..1.0) {
        let law = TailLaw::for_sparsity(2.0, mu).unwrap();
        let p = (n as f64).powf(mu);
        let split = split_sample(n, p, &law, seed, SplitOptions::default()).unwrap();
        prop_assert!(split.small_part.entries.iter().all(|t| t.value.abs() < split.entry_bound));
        let whole = split.reassemble();
        prop_assert_eq!(whole.nnz(), split.small_part.nnz());
        let cut = split.cut.as_ref().unwrap();
        prop_assert_eq!(cut.above.nnz() + cut.below.nnz(), split.large_part.nnz());
        prop_assert!(cut.above.entries.iter().all(|t| t.value.abs() >= cut.level));
        prop_assert!(cut.below.entries.iter().all(|t| t.value.abs() < cut.level));
    }

    #[test]
    fn sampling_is_seed_deterministic(seed in any::<u64>(), n in 5usize..60) {
        let law = TailLaw::with_default_crossover(2.0, 4.0).unwrap();
        let a = sample_sparse_wigner(n, n as f64 / 2.0, &law, seed).unwrap();
        let b = sample_sparse_wigner(n, n as f64 / 2.0, &law, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn trial_seeds_are_distinct(master in any::<u64>(), t in 0u64..1_000_000) {
        prop_assert_ne!(trial_seed(master, t), trial_seed(master, t + 1));
        prop_assert_eq!(trial_seed(master, t), trial_seed(master, t));
    }

    #[test]
    fn formatted_numbers_are_close(x in -1e6f64..1e6) {
        let back: f64 = format_number(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-7 + 1e-15 * x.abs());
    }
}
