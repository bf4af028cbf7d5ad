use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(String),

    #[error("precision target unreachable: {0}")]
    PrecisionUnreachable(String),

    #[error("invalid precision: {0}")]
    InvalidPrecision(String),

    #[error("invalid remainder spec: {0}")]
    InvalidSpec(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("small-t extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no lattice point passed the sign scan: {0}")]
    NoPassingLattice(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveArgument(_) => "NonPositiveArgument",
            Error::PrecisionUnreachable(_) => "PrecisionUnreachable",
            Error::InvalidPrecision(_) => "InvalidPrecision",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidIndex(_) => "InvalidIndex",
            Error::QuadratureNotConverged(_) => "QuadratureNotConverged",
            Error::ExtrapolationUnstable(_) => "ExtrapolationUnstable",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::NoPassingLattice(_) => "NoPassingLattice",
            Error::Parse(_) => "Parse",
        }
    }
}
