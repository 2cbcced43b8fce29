use serde::{Deserialize, Serialize};

use crate::decomposition::{SplitOptions, DEFAULT_CUT_LEVEL, DEFAULT_THRESHOLD_EXPONENT};
use crate::error::{invalid, Result};
use crate::tail_laws::{tail_index_for_mu, EntryLaw, TailLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EdgeLaw,
    PointProcess,
    Localization,
    Spike,
    CovarianceEdge,
    DecompositionCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EdgeLaw => "edge_law",
            ExperimentKind::PointProcess => "point_process",
            ExperimentKind::Localization => "localization",
            ExperimentKind::Spike => "spike",
            ExperimentKind::CovarianceEdge => "covariance_edge",
            ExperimentKind::DecompositionCheck => "decomposition_check",
        }
    }
}

fn one() -> usize {
    1
}
fn default_mu() -> f64 {
    1.0
}
fn default_c() -> f64 {
    2.0
}
fn default_tol() -> f64 {
    1e-8
}
fn default_eps() -> f64 {
    0.15
}
fn default_margin() -> f64 {
    0.3
}
fn default_reference() -> usize {
    100_000
}
fn default_exponent() -> f64 {
    DEFAULT_THRESHOLD_EXPONENT
}
fn default_cut() -> f64 {
    DEFAULT_CUT_LEVEL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub kind: ExperimentKind,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    /// Side length of Wigner-type samples.
    #[serde(default)]
    pub n: Option<usize>,
    /// Covariance factor shape `L x M`.
    #[serde(default)]
    pub l: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    /// Sparsity exponent: `p_n = n^mu`, tail index `2(1 + 1/mu)`.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Overrides `n^mu`.
    #[serde(default)]
    pub p_n: Option<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n: None,
            l: None,
            m: None,
            mu: default_mu(),
            p_n: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawFamily {
    Crossover,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSection {
    #[serde(default = "default_family")]
    pub family: LawFamily,
    /// Tail constant `c`.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Tail index; defaults to `2(1 + 1/mu)` (4 for covariance runs).
    #[serde(default)]
    pub beta: Option<f64>,
    /// Crossover point; defaults to the smallest feasible value `>= 3`.
    #[serde(default)]
    pub x0: Option<f64>,
}

fn default_family() -> LawFamily {
    LawFamily::Crossover
}

impl Default for LawSection {
    fn default() -> Self {
        LawSection {
            family: default_family(),
            c: default_c(),
            beta: None,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection {
            k: 1,
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationSection {
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Condition on `lambda_k > 2 + margin`.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for LocalizationSection {
    fn default() -> Self {
        LocalizationSection {
            eps: default_eps(),
            margin: default_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSection {
    #[serde(default = "default_exponent")]
    pub threshold_exponent: f64,
    #[serde(default)]
    pub threshold_override: Option<f64>,
    #[serde(default = "default_cut")]
    pub cut_level: f64,
    /// Extra cut levels whose large-entry counts are reported.
    #[serde(default)]
    pub cut_sweep: Vec<f64>,
}

impl Default for DecompositionSection {
    fn default() -> Self {
        DecompositionSection {
            threshold_exponent: default_exponent(),
            threshold_override: None,
            cut_level: default_cut(),
            cut_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeBackground {
    /// Wigner matrix built from the configured entry law.
    Wigner,
    /// Small part of the split of that matrix.
    SmallPart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeSection {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_background")]
    pub background: SpikeBackground,
}

fn default_theta() -> f64 {
    2.0
}
fn default_background() -> SpikeBackground {
    SpikeBackground::Wigner
}

impl Default for SpikeSection {
    fn default() -> Self {
        SpikeSection {
            theta: default_theta(),
            background: default_background(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSection {
    /// Plant `x sqrt(L + M)` at `S[0][0]`; unset runs the full heavy-tailed law.
    #[serde(default)]
    pub plant_x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointProcessSection {
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

fn default_thresholds() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

impl Default for PointProcessSection {
    fn default() -> Self {
        PointProcessSection {
            thresholds: default_thresholds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Size of the simulated limit sample for joint top-k comparisons.
    #[serde(default = "default_reference")]
    pub samples: usize,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            samples: default_reference(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
}

/// Full experiment description. Every field has a default except the run
/// kind, and the manifest echoes the filled-in value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub law: LawSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub localization: LocalizationSection,
    #[serde(default)]
    pub decomposition: DecompositionSection,
    #[serde(default)]
    pub spike: SpikeSection,
    #[serde(default)]
    pub covariance: CovarianceSection,
    #[serde(default)]
    pub point_process: PointProcessSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            run: RunSection {
                kind,
                trials: 1,
                master_seed: 0,
                threads: 1,
            },
            ensemble: EnsembleSection::default(),
            law: LawSection::default(),
            spectral: SpectralSection::default(),
            localization: LocalizationSection::default(),
            decomposition: DecompositionSection::default(),
            spike: SpikeSection::default(),
            covariance: CovarianceSection::default(),
            point_process: PointProcessSection::default(),
            reference: ReferenceSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.run.kind
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.run.threads == 0 {
            return Err(invalid("threads must be at least 1"));
        }
        if !(self.spectral.tol > 0.0) {
            return Err(invalid("spectral tolerance must be positive"));
        }
        if self.spectral.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if !(self.ensemble.mu > 0.0 && self.ensemble.mu <= 1.0) {
            return Err(invalid(format!("mu must lie in (0, 1], got {}", self.ensemble.mu)));
        }
        if !(self.localization.eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        if !(self.decomposition.cut_level >= 0.0) || self.decomposition.cut_sweep.iter().any(|c| !(*c >= 0.0)) {
            return Err(invalid("cut levels must be nonnegative"));
        }
        if self.point_process.thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(invalid("point-process thresholds must be positive"));
        }
        match self.kind() {
            ExperimentKind::CovarianceEdge => {
                self.covariance_shape()?;
            }
            _ => {
                let n = self.n()?;
                if self.spectral.k > n {
                    return Err(invalid(format!("k = {} exceeds n = {n}", self.spectral.k)));
                }
                self.p_n()?;
            }
        }
        self.entry_law()?;
        Ok(())
    }

    pub fn n(&self) -> Result<usize> {
        match self.ensemble.n {
            Some(n) if n >= 2 => Ok(n),
            Some(n) => Err(invalid(format!("n must be at least 2, got {n}"))),
            None => Err(invalid(format!("{} needs ensemble.n", self.kind().name()))),
        }
    }

    pub fn p_n(&self) -> Result<f64> {
        let n = self.n()? as f64;
        let p = self.ensemble.p_n.unwrap_or_else(|| n.powf(self.ensemble.mu));
        if !(p > 0.0 && p <= n) {
            return Err(invalid(format!("p_n must lie in (0, n], got {p}")));
        }
        Ok(p)
    }

    pub fn covariance_shape(&self) -> Result<(usize, usize)> {
        match (self.ensemble.l, self.ensemble.m) {
            (Some(l), Some(m)) if l >= 1 && m >= 1 => Ok((l, m)),
            _ => Err(invalid("covariance_edge needs ensemble.l and ensemble.m")),
        }
    }

    /// Tail index in force: explicit, 4 for covariance runs, else `2(1 + 1/mu)`.
    pub fn beta(&self) -> f64 {
        self.law.beta.unwrap_or(match self.kind() {
            ExperimentKind::CovarianceEdge => 4.0,
            _ => tail_index_for_mu(self.ensemble.mu),
        })
    }

    pub fn entry_law(&self) -> Result<EntryLaw> {
        match self.law.family {
            LawFamily::Gaussian => Ok(EntryLaw::Gaussian),
            LawFamily::Crossover => {
                let beta = self.beta();
                let law = match self.law.x0 {
                    Some(x0) => TailLaw::crossover(self.law.c, beta, x0)?,
                    None => TailLaw::with_default_crossover(self.law.c, beta)?,
                };
                Ok(EntryLaw::Crossover(law))
            }
        }
    }

    pub fn split_options(&self) -> SplitOptions {
        SplitOptions {
            threshold_exponent: self.decomposition.threshold_exponent,
            threshold_override: self.decomposition.threshold_override,
            cut_level: Some(self.decomposition.cut_level),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| crate::error::EdgeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| crate::error::EdgeError::Config(e.to_string()))
    }
}
