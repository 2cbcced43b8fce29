//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use edgelab::ensembles::{CsrMatrix, EnsembleSample, Triplet};
use edgelab::experiments::{run_experiment, ExperimentConfig, ExperimentKind, LawFamily, RunManifest};
use edgelab::limit_laws::{f_alpha, f_alpha_residual, mp_stieltjes, tau_alpha};
use edgelab::report::write_trials_csv;
use edgelab::seeding::rng_from_seed;
use edgelab::spectral::{dense_top_k, lanczos_top_k, LanczosOptions};
use edgelab::tail_laws::{EntryDistribution, TailLaw};
use rand::Rng;
use rand_distr::StandardNormal;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn run(cfg: &ExperimentConfig) -> Result<RunManifest, String> {
    run_experiment(cfg).map_err(|e| e.to_string())
}

fn score(m: &RunManifest, name: &str) -> Result<f64, String> {
    m.score(name)
        .map(|s| s.value)
        .ok_or_else(|| format!("missing score {name}"))
}

fn summary(m: &RunManifest, key: &str) -> Result<f64, String> {
    m.summary
        .get(key)
        .copied()
        .ok_or_else(|| format!("missing summary {key}"))
}

fn falpha_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [0.75, 1.0, 2.0, 5.0] {
        let z = f_alpha(a, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((z - (a + 1.0 / (2.0 * a))).abs());
    }
    Ok((worst < 1e-8, format!("max error {worst:.3e}")))
}

fn tau_and_stieltjes() -> Outcome {
    let tau = tau_alpha(1.0).map_err(|e| e.to_string())?;
    let g = mp_stieltjes(4.0, 1.0).map_err(|e| e.to_string())?;
    let tau_err = (tau - std::f64::consts::FRAC_1_SQRT_2).abs();
    let g_err = (g - 0.5).abs();
    Ok((
        tau_err < 1e-8 && g_err < 1e-8,
        format!("tau_1 = {tau:.10} (err {tau_err:.2e}), G(4) = {g:.10} (err {g_err:.2e})"),
    ))
}

fn stieltjes_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..=350 {
        let z = 1.5 + 0.01 * i as f64;
        let g = mp_stieltjes(2.0 * z * z, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((2.0 * z * g - (z - (z * z - 2.0).sqrt())).abs());
    }
    Ok((worst < 1e-6, format!("sup error {worst:.3e} over 351 points")))
}

fn spike_cfg(theta: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Spike);
    cfg.run.trials = 100;
    cfg.run.master_seed = 2024;
    cfg.ensemble.n = Some(2000);
    cfg.law.family = LawFamily::Gaussian;
    cfg.spectral.tol = 1e-7;
    cfg.spike.theta = theta;
    cfg
}

fn spike_bbp() -> Outcome {
    let sup = run(&spike_cfg(2.0))?;
    let lam = summary(&sup, "lambda_1_mean")?;
    let ov = summary(&sup, "overlap_sq_mean")?;
    let sub = run(&spike_cfg(0.5))?;
    let lam_sub = summary(&sub, "lambda_1_mean")?;
    let ok = (2.45..=2.55).contains(&lam) && (0.70..=0.80).contains(&ov) && (1.93..=2.07).contains(&lam_sub);
    Ok((
        ok,
        format!("theta=2: mean lambda_1 {lam:.4}, overlap^2 {ov:.4}; theta=0.5: mean lambda_1 {lam_sub:.4}"),
    ))
}

fn exact_t1_law() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::PointProcess);
    cfg.run.trials = 2000;
    cfg.run.master_seed = 5;
    cfg.ensemble.n = Some(500);
    cfg.ensemble.mu = 1.0;
    cfg.law.c = 2.0;
    let m = run(&cfg)?;
    let ks = score(&m, "ks_t1_exact")?;
    Ok((
        ks < 0.04,
        format!("KS {ks:.4} (1% critical {:.4})", summary(&m, "ks_critical_1pct")?),
    ))
}

fn poisson_counts() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::PointProcess);
    cfg.run.trials = 200;
    cfg.run.master_seed = 6;
    cfg.ensemble.n = Some(1000);
    cfg.law.c = 2.0;
    cfg.point_process.thresholds = vec![1.0];
    let m = run(&cfg)?;
    let mean = summary(&m, "mean_count_above_1")?;
    let limit = summary(&m, "expected_count_limit_1")?;
    let counts = m.column("count_above_1").ok_or("missing counts")?;
    let k = counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let se = (var / k).sqrt();
    let dispersion = var / mean;
    let ok = (limit - 1.0).abs() < 1e-12 && (mean - 1.0).abs() <= 3.0 * se && (0.7..=1.3).contains(&dispersion);
    Ok((
        ok,
        format!("mean count {mean:.4} (se {se:.4}), dispersion {dispersion:.4}"),
    ))
}

fn edge_cfg(n: usize, trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::EdgeLaw);
    cfg.run.trials = trials;
    cfg.run.master_seed = 7;
    cfg.ensemble.n = Some(n);
    cfg.ensemble.mu = 1.0;
    cfg.law.c = 4.0;
    cfg.spectral.tol = 1e-7;
    cfg
}

fn edge_law_tripwire() -> Outcome {
    let big = score(&run(&edge_cfg(1000, 400))?, "ks_lambda_1")?;
    let small = score(&run(&edge_cfg(500, 400))?, "ks_lambda_1")?;
    Ok((
        big <= 0.15 && big - small <= 0.03,
        format!("KS n=1000 {big:.4}, n=500 {small:.4}"),
    ))
}

fn localization() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Localization);
    cfg.run.trials = 200;
    cfg.run.master_seed = 8;
    cfg.ensemble.n = Some(1000);
    cfg.ensemble.mu = 1.0;
    cfg.law.c = 10.0;
    cfg.spectral.k = 1;
    cfg.spectral.tol = 1e-8;
    cfg.localization.eps = 0.15;
    cfg.localization.margin = 0.3;
    let m = run(&cfg)?;
    let events = summary(&m, "conditioning_events_1")?;
    let freq = score(&m, "event_frequency_1")?;
    let linf = score(&m, "mean_linf_1")?;
    Ok((
        events >= 50.0 && freq >= 0.85 && linf >= 0.5,
        format!("{events} conditioning events, frequency {freq:.4}, mean Linf {linf:.4}"),
    ))
}

fn covariance_cfg(x: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::CovarianceEdge);
    cfg.run.trials = 50;
    cfg.run.master_seed = 9;
    cfg.ensemble.l = Some(1500);
    cfg.ensemble.m = Some(3000);
    cfg.law.family = LawFamily::Gaussian;
    cfg.spectral.tol = 1e-7;
    cfg.covariance.plant_x = Some(x);
    cfg
}

fn covariance_plant() -> Outcome {
    let alpha = 2.0;
    let z = f_alpha(1.2, alpha).map_err(|e| e.to_string())?;
    let residual = f_alpha_residual(z, 1.2, alpha).map_err(|e| e.to_string())?;
    let predicted = (1.0 + alpha) * z * z;
    let sup = summary(&run(&covariance_cfg(1.2))?, "lambda_1_mean")?;
    let edge = (1.0 + alpha.sqrt()).powi(2);
    let sub = summary(&run(&covariance_cfg(0.5))?, "lambda_1_mean")?;
    let rel_sup = (sup - predicted).abs() / predicted;
    let rel_sub = (sub - edge).abs() / edge;
    Ok((
        residual <= 1e-9 && rel_sup <= 0.05 && rel_sub <= 0.05,
        format!(
            "x=1.2: mean {sup:.4} vs {predicted:.4} ({:.2}%), residual {residual:.1e}; x=0.5: mean {sub:.4} vs {edge:.4} ({:.2}%)",
            100.0 * rel_sup,
            100.0 * rel_sub
        ),
    ))
}

fn decomposition() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::DecompositionCheck);
    cfg.run.trials = 50;
    cfg.run.master_seed = 10;
    cfg.ensemble.n = Some(1000);
    cfg.ensemble.mu = 0.5;
    let m = run(&cfg)?;
    let mut zs = Vec::new();
    for k in 1..=4 {
        zs.push(score(&m, &format!("moment_{k}_z"))?);
    }
    let bound = 1000f64.ln().powi(-5);
    let small_max = summary(&m, "small_max_abs")?;
    let cut = score(&m, "cut_mismatches")?;
    let ok = zs.iter().all(|z| z.abs() <= 4.0) && small_max < bound && cut == 0.0;
    Ok((
        ok,
        format!(
            "moment z {:?}, max small entry {small_max:.3e} < {bound:.3e}, cut mismatches {cut}",
            zs.iter().map(|z| (z * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    ))
}

fn determinism() -> Outcome {
    let mut cfg = edge_cfg(300, 48);
    cfg.spectral.k = 3;
    cfg.reference.samples = 2000;
    let mut csv = Vec::new();
    for threads in [1, 8] {
        cfg.run.threads = threads;
        let m = run(&cfg)?;
        let mut buf = Vec::new();
        write_trials_csv(&m, &mut buf).map_err(|e| e.to_string())?;
        csv.push(buf);
    }
    Ok((csv[0] == csv[1], format!("{} bytes each", csv[0].len())))
}

fn random_symmetric(n: usize, density: f64, heavy: bool, seed: u64) -> EnsembleSample {
    let mut rng = rng_from_seed(seed);
    let law = TailLaw::with_default_crossover(2.0, 4.0).unwrap();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < density {
                let v: f64 = if heavy {
                    law.sample(&mut rng)
                } else {
                    rng.sample(StandardNormal)
                };
                entries.push(Triplet::new(i, j, v / (n as f64).sqrt()));
            }
        }
    }
    EnsembleSample::from_symmetric_triplets(n, entries).unwrap()
}

fn top5(s: &EnsembleSample, seed: u64) -> Result<Vec<f64>, String> {
    let opts = LanczosOptions {
        tol: 1e-12,
        seed,
        ..LanczosOptions::default()
    };
    let r = lanczos_top_k(&CsrMatrix::from_sample(s), 5, &opts).map_err(|e| e.to_string())?;
    if !r.converged {
        return Err(format!("Lanczos did not converge on n = {}", s.dim()));
    }
    Ok(r.eigenvalues)
}

fn eigensolver_oracle() -> Outcome {
    let mut rng = rng_from_seed(12);
    let mut worst: f64 = 0.0;
    for t in 0..50 {
        let n = rng.random_range(8..=512);
        let density = if t % 2 == 0 { 1.0 } else { rng.random_range(0.01..0.2) };
        let s = random_symmetric(n, density, t % 3 == 0, 100 + t);
        let lanczos = top5(&s, t)?;
        let dense = dense_top_k(&s.to_dense(), 5, false).map_err(|e| e.to_string())?;
        for (a, b) in lanczos.iter().zip(&dense.eigenvalues) {
            worst = worst.max((a - b).abs());
        }
    }
    let mut weyl_violation: f64 = 0.0;
    for t in 0..50u64 {
        let n = rng.random_range(8..=256);
        let a = random_symmetric(n, 0.3, t % 2 == 0, 1000 + t);
        let b = random_symmetric(n, 0.3, false, 2000 + t);
        let sum = EnsembleSample::from_symmetric_triplets(n, a.entries.iter().chain(&b.entries).copied()).unwrap();
        let (la, lb, ls) = (top5(&a, t)?, top5(&b, t)?, top5(&sum, t)?);
        for i in 0..5 {
            for j in 0..5 - i {
                weyl_violation = weyl_violation.max(ls[i + j] - la[i] - lb[j]);
            }
        }
    }
    Ok((
        worst < 1e-8 && weyl_violation <= 1e-10,
        format!("max |dlambda| {worst:.2e}, worst Weyl excess {weyl_violation:.2e}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("F_alpha closed form at alpha = 1", falpha_closed_form),
        ("tau_1 and G(4) at alpha = 1", tau_and_stieltjes),
        ("Stieltjes identity on [1.5, 5]", stieltjes_identity),
        ("spiked Wigner outlier and overlap", spike_bbp),
        ("exact law of the largest entry", exact_t1_law),
        ("Poisson counts above 1", poisson_counts),
        ("top eigenvalue law tripwire", edge_law_tripwire),
        ("eigenvector localisation", localization),
        ("planted covariance entry", covariance_plant),
        ("small/large split law equality", decomposition),
        ("thread-count determinism", determinism),
        ("Lanczos vs dense and Weyl", eigensolver_oracle),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            id,
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
