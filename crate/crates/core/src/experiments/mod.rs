//! Monte Carlo harness: run seeded trials in parallel, summarise them and
//! score the summaries against the analytic limits.

mod config;
mod ks;
mod reals;
mod runs;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::*;
pub use ks::{ks_critical_1pct, ks_statistic, ks_statistic_with_atoms, ks_two_sample};
pub use runs::{
    run_covariance_edge, run_decomposition_check, run_edge_law, run_localization, run_point_process, run_spike,
};

use crate::error::{EdgeError, Result};
use crate::seeding::trial_seed;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub excluded: bool,
    /// One value per manifest column; empty when excluded.
    #[serde(with = "reals::vec")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// Exact finite-n statement: failure means a bug.
    Hard,
    /// Asymptotic statement: a regression tripwire.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Gate {
    pub fn at_most(kind: GateKind, upper: f64) -> Self {
        Gate {
            kind,
            lower: None,
            upper: Some(upper),
        }
    }
    pub fn at_least(kind: GateKind, lower: f64) -> Self {
        Gate {
            kind,
            lower: Some(lower),
            upper: None,
        }
    }
    pub fn between(kind: GateKind, lower: f64, upper: f64) -> Self {
        Gate {
            kind,
            lower: Some(lower),
            upper: Some(upper),
        }
    }
    pub fn admits(&self, value: f64) -> bool {
        value.is_finite() && self.lower.is_none_or(|l| value >= l) && self.upper.is_none_or(|u| value <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub name: String,
    #[serde(with = "reals::one")]
    pub value: f64,
    pub gate: Option<Gate>,
    pub passed: Option<bool>,
}

impl Score {
    pub fn new(name: impl Into<String>, value: f64, gate: Option<Gate>) -> Self {
        Score {
            name: name.into(),
            value,
            passed: gate.map(|g| g.admits(value)),
            gate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub x: f64,
    pub empirical_cdf: f64,
    #[serde(with = "reals::one")]
    pub analytic_cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub records: Vec<TrialRecord>,
    pub excluded: usize,
    #[serde(with = "reals::map")]
    pub summary: BTreeMap<String, f64>,
    pub scores: Vec<Score>,
    /// Empirical vs analytic CDF of the headline statistic.
    pub cdf_table: Vec<CdfRow>,
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn score(&self, name: &str) -> Option<&Score> {
        self.scores.iter().find(|s| s.name == name)
    }

    /// Values of one column over the included trials.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(
            self.records
                .iter()
                .filter(|r| !r.excluded)
                .map(|r| r.values[idx])
                .collect(),
        )
    }

    pub fn hard_failures(&self) -> Vec<&Score> {
        self.scores
            .iter()
            .filter(|s| s.gate.map(|g| g.kind) == Some(GateKind::Hard) && s.passed == Some(false))
            .collect()
    }
}

/// Outcome of one trial.
pub enum TrialOutput {
    Values(Vec<f64>),
    /// The eigensolver did not converge; the trial is dropped and counted.
    Excluded,
}

/// Run `trials` independent trials on a pool of `threads` workers. Trial `t`
/// always receives `trial_seed(master_seed, t)`, and results are returned in
/// trial order, so the output does not depend on scheduling.
pub fn run_trials<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize, u64) -> Result<TrialOutput> + Sync + Send,
{
    let trials = cfg.run.trials;
    let master = cfg.run.master_seed;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.threads)
        .build()
        .map_err(|e| EdgeError::Config(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(master, t as u64);
                Ok(match f(t, seed)? {
                    TrialOutput::Values(values) => TrialRecord {
                        trial: t,
                        seed,
                        excluded: false,
                        values,
                    },
                    TrialOutput::Excluded => TrialRecord {
                        trial: t,
                        seed,
                        excluded: true,
                        values: Vec::new(),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let excluded = records.iter().filter(|r| r.excluded).count();
    if excluded * 100 > trials {
        return Err(EdgeError::ExcessiveExclusions { excluded, trials });
    }
    Ok(records)
}

/// Dispatch on the configured kind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    match cfg.kind() {
        ExperimentKind::EdgeLaw => run_edge_law(cfg),
        ExperimentKind::PointProcess => run_point_process(cfg),
        ExperimentKind::Localization => run_localization(cfg),
        ExperimentKind::Spike => run_spike(cfg),
        ExperimentKind::CovarianceEdge => run_covariance_edge(cfg),
        ExperimentKind::DecompositionCheck => run_decomposition_check(cfg),
    }
}

pub(crate) struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub(crate) fn new(
        cfg: &ExperimentConfig,
        columns: Vec<String>,
        records: Vec<TrialRecord>,
        started: Instant,
    ) -> Self {
        let excluded = records.iter().filter(|r| r.excluded).count();
        ManifestBuilder {
            started,
            manifest: RunManifest {
                version: ARTIFACT_VERSION.to_string(),
                config: cfg.clone(),
                columns,
                records,
                excluded,
                summary: BTreeMap::new(),
                scores: Vec::new(),
                cdf_table: Vec::new(),
                notes: Vec::new(),
                wall_clock_seconds: 0.0,
            },
        }
    }

    pub(crate) fn column(&self, name: &str) -> Vec<f64> {
        self.manifest.column(name).unwrap_or_default()
    }

    pub(crate) fn summary(&mut self, key: impl Into<String>, value: f64) {
        self.manifest.summary.insert(key.into(), value);
    }

    pub(crate) fn score(&mut self, name: impl Into<String>, value: f64, gate: Option<Gate>) {
        self.manifest.scores.push(Score::new(name, value, gate));
    }

    pub(crate) fn note(&mut self, text: impl Into<String>) {
        self.manifest.notes.push(text.into());
    }

    pub(crate) fn cdf_table(&mut self, rows: Vec<CdfRow>) {
        self.manifest.cdf_table = rows;
    }

    pub(crate) fn finish(mut self) -> RunManifest {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        self.manifest
    }
}

pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Empirical vs analytic CDF on an even grid spanning the samples.
pub(crate) fn cdf_rows(samples: &[f64], cdf: &dyn Fn(f64) -> f64, points: usize) -> Vec<CdfRow> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let span = (hi - lo).max(1e-12);
    let (lo, hi) = (lo - 0.05 * span, hi + 0.05 * span);
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64;
            let count = s.partition_point(|v| *v <= x);
            CdfRow {
                x,
                empirical_cdf: count as f64 / s.len() as f64,
                analytic_cdf: cdf(x),
            }
        })
        .collect()
}
