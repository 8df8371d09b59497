use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested number of measurements exceeds `p + 1`.
    #[error("bound exceeded: R = {requested} but at most {max} mutually unbiased measurements exist for d = {d}")]
    Bound { d: u64, requested: usize, max: u64 },

    /// A derived multiplier is not an admissible positive integer.
    #[error("construction failed for pair ({j}, {k}): {reason}")]
    Construction { j: usize, k: usize, reason: String },

    #[error("degenerate angle: {0}")]
    DegenerateAngle(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("empty preparation: mask ({direction}, {outcome}) removes the whole state")]
    EmptyPreparation { direction: usize, outcome: usize },

    #[error("grid too small: {loss:.3e} of the probability reaches the grid edge")]
    GridTooSmall { loss: f64 },

    #[error("search space too large: {0}")]
    Resource(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Short machine-readable tag, used by the command line for structured errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Bound { .. } => "bound",
            Error::Construction { .. } => "construction",
            Error::DegenerateAngle(_) => "degenerate-angle",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Resolution(_) => "resolution",
            Error::EmptyPreparation { .. } => "empty-preparation",
            Error::GridTooSmall { .. } => "grid-too-small",
            Error::Resource(_) => "resource",
            Error::Numerical(_) => "numerical",
        }
    }
}
