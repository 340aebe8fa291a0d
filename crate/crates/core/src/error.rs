use thiserror::Error;

/// Every failure the solver pipeline can surface.
///
/// Variant names are stable: the CLI reports them verbatim as the
/// originating error name.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FredholmError {
    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch { expected: String, found: String },

    #[error("resolution mismatch: expected {expected}, found {found}")]
    ResolutionMismatch { expected: usize, found: usize },

    #[error("non-finite coefficient at position {index}")]
    NonFinite { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("symbol has no bounded monotone envelope: {0}")]
    UnboundedSymbol(String),

    #[error("truncation target {theta} unreachable within rank budget {max_rank}")]
    TargetUnreachable { theta: f64, max_rank: usize },

    #[error("no splitting reaches theta = {theta}: {reason}")]
    NoSplitFound { theta: f64, reason: String },

    #[error("contraction bound {kappa} is not in [0, 1)")]
    KappaOutOfRange { kappa: f64 },

    #[error("residual {residual:e} exceeds allowed {allowed:e}")]
    ResidualCheckFailed { residual: f64, allowed: f64 },

    #[error("finite-rank part has no independent range vectors but is nonzero")]
    DegenerateBasis,

    #[error(
        "smallest singular value {sigma_min:e} lies in the ambiguous band [{lower:e}, {upper:e}]"
    )]
    AmbiguousSingularity {
        sigma_min: f64,
        lower: f64,
        upper: f64,
    },

    #[error("fixed vector residual {residual:e} exceeds tolerance {tol:e}")]
    CertificationFailed { residual: f64, tol: f64 },

    #[error("rank equivalence violated: {0}")]
    EquivalenceViolated(String),

    #[error("matrix R is not invertible (condition estimate {condition:e})")]
    RNotInvertible { condition: f64 },

    #[error("Sobolev index must be nonnegative, got {0}")]
    NegativeS(f64),

    #[error("decay fit needs at least {needed} nonzero coefficients in the window, found {found}")]
    InsufficientSupport { needed: usize, found: usize },

    #[error("bootstrap inequality fails at s = {s}: {lhs:e} > {bound:e}")]
    BootstrapViolated { s: f64, lhs: f64, bound: f64 },

    #[error("{0} did not converge")]
    NoConvergence(String),

    #[error("parse error in field `{field}` at {location}: {message}")]
    ParseError {
        field: String,
        location: String,
        message: String,
    },

    #[error("validation error in `{field}`: {message}")]
    ValidationError { field: String, message: String },
}

impl FredholmError {
    /// Stable name of the variant, used in machine-readable reports.
    pub fn name(&self) -> &'static str {
        match self {
            Self::BasisMismatch { .. } => "BasisMismatch",
            Self::ResolutionMismatch { .. } => "ResolutionMismatch",
            Self::NonFinite { .. } => "NonFinite",
            Self::InvalidArgument(_) => "InvalidArgument",
            Self::UnboundedSymbol(_) => "UnboundedSymbol",
            Self::TargetUnreachable { .. } => "TargetUnreachable",
            Self::NoSplitFound { .. } => "NoSplitFound",
            Self::KappaOutOfRange { .. } => "KappaOutOfRange",
            Self::ResidualCheckFailed { .. } => "ResidualCheckFailed",
            Self::DegenerateBasis => "DegenerateBasis",
            Self::NoConvergence(_) => "NoConvergence",
            Self::AmbiguousSingularity { .. } => "AmbiguousSingularity",
            Self::CertificationFailed { .. } => "CertificationFailed",
            Self::EquivalenceViolated(_) => "EquivalenceViolated",
            Self::RNotInvertible { .. } => "RNotInvertible",
            Self::NegativeS(_) => "NegativeS",
            Self::InsufficientSupport { .. } => "InsufficientSupport",
            Self::BootstrapViolated { .. } => "BootstrapViolated",
            Self::ParseError { .. } => "ParseError",
            Self::ValidationError { .. } => "ValidationError",
        }
    }
}

pub type Result<T> = std::result::Result<T, FredholmError>;
