use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgelab::ensembles::{sample_covariance_factor, sample_sparse_wigner, symmetrize_covariance, EnsembleSample};
use edgelab::experiments::run_experiment;
use edgelab::io::{load_matrix_market, save_matrix_market};
use edgelab::limit_laws::{f_alpha, f_alpha_residual, mp_density, mp_stieltjes, tau_alpha, LimitLaw};
use edgelab::report::{format_number, load_config, load_manifest, output_dir, render_report, write_cdf_csv, write_run};
use edgelab::spectral::{top_k_eigs_with, LanczosOptions};
use edgelab::tail_laws::{tail_index_for_mu, EntryLaw, TailLaw};
use edgelab::{EdgeError, Result};

#[derive(Parser)]
#[command(
    name = "edgelab",
    version,
    about = "Spectral-edge statistics of heavy-tailed random matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one ensemble realisation and write it as MatrixMarket.
    Sample {
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Top eigenvalues of a MatrixMarket file or a fresh sample.
    Spectrum {
        /// MatrixMarket input; a fresh sample is drawn when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        ens: EnsembleArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Evaluate a limit law, F_alpha or tau_alpha to CSV.
    Limits(LimitsArgs),
    /// Run an experiment config and write manifest.json, trials.csv and cdf.csv.
    Experiment {
        config: PathBuf,
        /// Output directory (overrides EDGELAB_OUTPUT_DIR and the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render a manifest as a summary table.
    Report {
        manifest: PathBuf,
        /// Also write the empirical/analytic CDF table here.
        #[arg(long)]
        cdf: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleChoice {
    Wigner,
    Covariance,
    Symmetrized,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Crossover,
    Gaussian,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum, default_value = "wigner")]
    ensemble: EnsembleChoice,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Expected nonzeros per row; defaults to n^mu.
    #[arg(long)]
    p_n: Option<f64>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value = "crossover")]
    family: Family,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EnsembleArgs {
    fn law(&self) -> Result<EntryLaw> {
        if let Family::Gaussian = self.family {
            return Ok(EntryLaw::Gaussian);
        }
        let beta = self.beta.unwrap_or(match self.ensemble {
            EnsembleChoice::Wigner => tail_index_for_mu(self.mu),
            _ => 4.0,
        });
        Ok(EntryLaw::Crossover(match self.x0 {
            Some(x0) => TailLaw::crossover(self.c, beta, x0)?,
            None => TailLaw::with_default_crossover(self.c, beta)?,
        }))
    }

    fn sample(&self) -> Result<EnsembleSample> {
        let law = self.law()?;
        match self.ensemble {
            EnsembleChoice::Wigner => {
                let p = self.p_n.unwrap_or((self.n as f64).powf(self.mu));
                sample_sparse_wigner(self.n, p, &law, self.seed)
            }
            EnsembleChoice::Covariance | EnsembleChoice::Symmetrized => {
                let (Some(l), Some(m)) = (self.l, self.m) else {
                    return Err(EdgeError::InvalidParameter("--l and --m are required".into()));
                };
                let s = sample_covariance_factor(l, m, &law, self.seed)?;
                match self.ensemble {
                    EnsembleChoice::Symmetrized => symmetrize_covariance(&s),
                    _ => Ok(s),
                }
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LawChoice {
    /// CDF of the largest extreme entry.
    Frechet,
    /// CDF of the top eigenvalue, f pushed forward.
    Lambda1,
    /// Expected number of extreme entries above x.
    Poisson,
    /// CDF of the top covariance eigenvalue.
    CovarianceEdge,
    MpDensity,
    MpStieltjes,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LimitsArgs {
    #[arg(long, value_enum, conflicts_with_all = ["falpha", "tau"])]
    law: Option<LawChoice>,
    /// Solve for F_alpha(x).
    #[arg(long, conflicts_with = "tau")]
    falpha: bool,
    /// Threshold tau_alpha.
    #[arg(long)]
    tau: bool,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Single evaluation point.
    #[arg(long, conflicts_with = "grid")]
    x: Option<f64>,
    /// `start:stop:step`, inclusive.
    #[arg(long)]
    grid: Option<String>,
    /// Write CSV here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || EdgeError::InvalidParameter(format!("grid must be start:stop:step, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let p = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (a, b, h) = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
    if !(a.is_finite() && b.is_finite() && h > 0.0 && b >= a) {
        return Err(bad());
    }
    let steps = ((b - a) / h + 1e-9).floor() as usize;
    if steps > 10_000_000 {
        return Err(EdgeError::InvalidParameter("grid has too many points".into()));
    }
    // Round away accumulated binary noise so `0.5:5:0.1` hits 1 exactly.
    Ok((0..=steps)
        .map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12)
        .collect())
}

type Evaluator = Box<dyn Fn(f64) -> Result<f64>>;

fn limits(args: &LimitsArgs) -> Result<String> {
    let (column, eval): (&str, Evaluator) = if args.tau {
        return Ok(format!("{}\n", format_number(tau_alpha(args.alpha)?)));
    } else if args.falpha {
        let alpha = args.alpha;
        (
            "f_alpha",
            Box::new(move |x| {
                let z = f_alpha(x, alpha)?;
                if x > tau_alpha(alpha)? && f_alpha_residual(z, x, alpha)? > 1e-9 {
                    return Err(EdgeError::Bracket(format!(
                        "F_alpha root at x = {x} failed its residual check"
                    )));
                }
                Ok(z)
            }),
        )
    } else {
        let Some(choice) = args.law else {
            return Err(EdgeError::InvalidParameter(
                "pass one of --law, --falpha or --tau".into(),
            ));
        };
        let (c, mu, alpha) = (args.c, args.mu, args.alpha);
        match choice {
            LawChoice::Frechet => ("cdf", limit_cdf(LimitLaw::FrechetMu { c, mu })?),
            LawChoice::Lambda1 => ("cdf", limit_cdf(LimitLaw::PushforwardF { c, mu })?),
            LawChoice::CovarianceEdge => ("cdf", limit_cdf(LimitLaw::CovarianceEdge { c, alpha })?),
            LawChoice::Poisson => {
                let law = LimitLaw::PoissonIntensity { c, mu };
                law.validate()?;
                ("expected_count", Box::new(move |x| law.expected_count(x)))
            }
            LawChoice::MpDensity => ("density", Box::new(move |x| mp_density(x, alpha))),
            LawChoice::MpStieltjes => ("stieltjes", Box::new(move |x| mp_stieltjes(x, alpha))),
        }
    };
    match (&args.grid, args.x) {
        (None, Some(x)) => Ok(format!("{}\n", format_number(eval(x)?))),
        (Some(g), None) => {
            let mut out = format!("x,{column}\n");
            for x in parse_grid(g)? {
                out.push_str(&format!("{},{}\n", format_number(x), format_number(eval(x)?)));
            }
            Ok(out)
        }
        _ => Err(EdgeError::InvalidParameter("pass exactly one of --x or --grid".into())),
    }
}

fn limit_cdf(law: LimitLaw) -> Result<Evaluator> {
    law.validate()?;
    Ok(Box::new(move |x| law.cdf(x)))
}

/// Create `path` via `write`; on failure the partial file is removed.
fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let result = File::create(path).map_err(EdgeError::from).and_then(|f| {
        let mut w = BufWriter::new(f);
        write(&mut w)?;
        w.flush()?;
        Ok(())
    });
    if result.is_err() {
        let _ = fs::remove_file(path);
    }
    result
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Sample { ens, out: path } => {
            let s = ens.sample()?;
            if let Err(e) = save_matrix_market(&s, &path) {
                let _ = fs::remove_file(&path);
                return Err(e);
            }
            writeln!(
                out,
                "wrote {}x{} matrix with {} stored entries to {}",
                s.rows,
                s.cols,
                s.nnz(),
                path.display()
            )?;
        }
        Command::Spectrum { input, ens, k, tol } => {
            let s = match input {
                Some(p) => load_matrix_market(&p)?,
                None => ens.sample()?,
            };
            let opts = LanczosOptions {
                tol,
                seed: s.seed,
                ..LanczosOptions::default()
            };
            let r = top_k_eigs_with(&s, k, &opts)?;
            writeln!(out, "index,eigenvalue,residual")?;
            for (i, (lam, res)) in r.eigenvalues.iter().zip(&r.residuals).enumerate() {
                writeln!(out, "{},{},{:e}", i + 1, lam, res)?;
            }
            if !r.converged {
                eprintln!(
                    "warning: eigensolver did not reach tol {tol} after {} iterations",
                    r.iterations
                );
            }
        }
        Command::Limits(args) => {
            let text = limits(&args)?;
            match &args.out {
                Some(p) => write_file(p, |w| Ok(w.write_all(text.as_bytes())?))?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Experiment {
            config,
            out_dir,
            threads,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(t) = threads {
                cfg.run.threads = t;
                cfg.validate()?;
            }
            let manifest = run_experiment(&cfg)?;
            let dir = output_dir(&cfg, out_dir.as_deref());
            let files = write_run(&manifest, &dir)?;
            out.write_all(render_report(&manifest).as_bytes())?;
            writeln!(out)?;
            writeln!(out, "manifest {}", files.manifest.display())?;
            writeln!(out, "trials   {}", files.trials.display())?;
            writeln!(out, "cdf      {}", files.cdf.display())?;
        }
        Command::Report { manifest, cdf } => {
            let m = load_manifest(&manifest)?;
            if let Some(p) = cdf {
                write_file(&p, |w| write_cdf_csv(&m, w))?;
            }
            out.write_all(render_report(&m).as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
