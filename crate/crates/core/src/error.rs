use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("series trivial at level {0}")]
    TrivialPiece(u64),
    #[error("enumeration cap exceeded: {count} points requested, cap is {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("legendre refinement did not converge for slope {slope}: {reason}")]
    NonConvergence { slope: String, reason: String },
    #[error("box too small: {0}")]
    BoxTooSmall(String),
    #[error("smoothing too small: negative determinant mass fraction {fraction:.4}")]
    SmoothingTooSmall { fraction: f64 },
    #[error("tail not captured: {0}")]
    TailNotCaptured(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::TrivialPiece(_) => "trivial_piece",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::Numeric(_) => "numeric",
            Error::NonConvergence { .. } => "non_convergence",
            Error::BoxTooSmall(_) => "box_too_small",
            Error::SmoothingTooSmall { .. } => "smoothing_too_small",
            Error::TailNotCaptured(_) => "tail_not_captured",
            Error::Parse(_) => "parse",
            Error::Invariant(_) => "invariant",
        }
    }
}
