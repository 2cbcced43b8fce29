use thiserror::Error;

pub type Result<T, E = EdgeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible variance: tail alone contributes variance {tail_variance:.6} (raise the crossover point)")]
    InfeasibleVariance { tail_variance: f64 },

    #[error("argument {value} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("regular graph degree {degree} must be odd for a circulant band (use the matching construction)")]
    Parity { degree: usize },

    #[error("matching construction exceeded {0} retries without avoiding multi-edges")]
    RetryCap(usize),

    #[error("duplicate placement at site ({0}, {1})")]
    DuplicateSite(usize, usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of bounds for length {len}")]
    Index { index: usize, len: usize },

    #[error("{0}")]
    Domain(String),

    #[error("unsupported variance profile: {0}")]
    UnsupportedProfile(String),

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("too many excluded trials: {excluded} of {trials}")]
    ExcessiveExclusions { excluded: usize, trials: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl EdgeError {
    /// Internal errors signal a bug or numerical breakdown rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            EdgeError::Bracket(_)
                | EdgeError::Quadrature(_)
                | EdgeError::NonConvergence { .. }
                | EdgeError::Io(_)
                | EdgeError::Json(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> EdgeError {
    EdgeError::InvalidParameter(msg.into())
}
