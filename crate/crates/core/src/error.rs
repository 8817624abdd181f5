use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the analyzer.
///
/// Each variant maps to a stable machine-readable code via [`Error::code`],
/// which the command-line front end forwards into reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("evaluation of component {component} failed: {reason}")]
    Evaluation { component: usize, reason: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("ambiguous rank: singular value {sigma:e} lies between the rank thresholds")]
    AmbiguousRank { sigma: f64 },

    #[error("constant-rank violation: rank {at_point} at p but {nearby} at a nearby point")]
    ConstantRank { at_point: usize, nearby: usize },

    #[error("structural inconsistency: {0}")]
    Structural(String),

    #[error("undefined operation: {0}")]
    Undefined(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("invalid map specification: {0}")]
    Spec(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax_error",
            Error::UnknownIdentifier { .. } => "unknown_identifier",
            Error::UnboundParameter(_) => "unbound_parameter",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Evaluation { .. } => "evaluation_error",
            Error::Numeric(_) => "numeric_error",
            Error::AmbiguousRank { .. } => "rank_ambiguity",
            Error::ConstantRank { .. } => "constant_rank_violation",
            Error::Structural(_) => "structural_inconsistency",
            Error::Undefined(_) => "undefined_operation",
            Error::Precondition(_) => "precondition_violated",
            Error::Unsupported(_) => "frame_unavailable",
            Error::Spec(_) => "spec_error",
        }
    }

    /// True for failures caused by numerical conditioning rather than bad input.
    pub fn is_numeric_instability(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_) | Error::AmbiguousRank { .. } | Error::ConstantRank { .. }
        )
    }
}
