use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Feller condition violated: 2*kappa*theta = {lhs} < sigma^2 = {rhs}")]
    Feller { lhs: f64, rhs: f64 },

    #[error("rho must lie in (-1, 1), got {0}")]
    InvalidRho(f64),

    #[error("argument must be positive, got {0}")]
    NonPositive(f64),

    #[error("z = {z} lies below phi_min = {phi_min}")]
    BelowPhiMin { z: f64, phi_min: f64 },

    #[error("probe grid reaches {reached}, needs magnitude at least {required}")]
    ProbeTooShort { reached: f64, required: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("moment explosion: Riccati solution exceeded {threshold} at t = {t}")]
    MomentExplosion { t: f64, threshold: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("optimizer budget must be positive")]
    ZeroBudget,

    #[error("handoff time {handoff} must lie strictly inside (0, {horizon})")]
    Handoff { handoff: f64, horizon: f64 },

    #[error("time {0} is not a node of the grid")]
    NotOnGrid(f64),

    #[error("operation requires rho = 0, got {0}")]
    RequiresZeroRho(f64),

    #[error("operation requires rho != 0")]
    RequiresNonzeroRho,

    #[error("integrand not orthogonal to the limiting driver: |nu . sigma| = {0}")]
    NotOrthogonal(f64),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error("invalid config: {}", join_violations(.0))]
    Config(Vec<crate::config::Violation>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[crate::config::Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Stable machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Feller { .. } => "feller",
            Error::InvalidRho(_) => "invalid_rho",
            Error::NonPositive(_) => "non_positive",
            Error::BelowPhiMin { .. } => "below_phi_min",
            Error::ProbeTooShort { .. } => "probe_too_short",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::MomentExplosion { .. } => "moment_explosion",
            Error::NonFinite(_) => "non_finite",
            Error::Empty(_) => "empty",
            Error::ZeroBudget => "zero_budget",
            Error::Handoff { .. } => "handoff",
            Error::NotOnGrid(_) => "not_on_grid",
            Error::RequiresZeroRho(_) => "requires_zero_rho",
            Error::RequiresNonzeroRho => "requires_nonzero_rho",
            Error::NotOrthogonal(_) => "not_orthogonal",
            Error::Invariant(_) => "invariant",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
