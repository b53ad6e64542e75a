use thiserror::Error;

/// Failure modes shared by every construction in the crate.
///
/// Numerical refutations (a hypothesis that does not hold for the given data)
/// are kept apart from malformed input so callers can tell them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator is not injective: numerical rank {rank} < {cols} columns")]
    NotInjective { rank: usize, cols: usize },

    #[error("hypothesis `{hypothesis}` violated (residual {residual:.3e})")]
    HypothesisViolated { hypothesis: String, residual: f64 },

    #[error("not a K-frame: range(K) is not contained in range(T) (residual {residual:.3e})")]
    NotAKFrame { residual: f64 },

    #[error("frame is not representable as {{K P e_j}} over an orthonormal basis: {reason} (residual {residual:.3e})")]
    NotRepresentable { reason: String, residual: f64 },

    #[error("no K-dual exists: range(K) is not contained in range(T) (residual {residual:.3e})")]
    NoDualExists { residual: f64 },

    #[error("isometry search failed after {iterations} iterations (best residual {residual:.3e})")]
    IsometrySearchFailed { iterations: usize, residual: f64 },
}

impl FrameError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FrameError::InvalidInput(msg.into())
    }

    pub(crate) fn violated(hypothesis: impl Into<String>, residual: f64) -> Self {
        FrameError::HypothesisViolated {
            hypothesis: hypothesis.into(),
            residual,
        }
    }

    /// Short machine-readable tag, used by the command-line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            FrameError::InvalidInput(_) => "invalid-input",
            FrameError::NotInjective { .. } => "not-injective",
            FrameError::HypothesisViolated { .. } => "hypothesis-violated",
            FrameError::NotAKFrame { .. } => "not-a-k-frame",
            FrameError::NotRepresentable { .. } => "not-representable",
            FrameError::NoDualExists { .. } => "no-dual-exists",
            FrameError::IsometrySearchFailed { .. } => "isometry-search-failed",
        }
    }
}

pub type Result<T> = std::result::Result<T, FrameError>;
