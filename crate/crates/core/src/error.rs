use thiserror::Error;

pub type Result<T> = std::result::Result<T, SteklovError>;

#[derive(Debug, Error)]
pub enum SteklovError {
    #[error("invalid domain descriptor `{0}`: {1}")]
    InvalidDomain(String, String),

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,

    #[error("invalid symbol arguments: {0}")]
    InvalidSymbol(String),

    #[error("ill-conditioned system `{name}` (condition number {condition:.3e})")]
    IllConditioned { name: String, condition: f64 },

    #[error("singular bordered system for the Dirichlet-to-Neumann map (condition number {0:.3e})")]
    SingularBordered(f64),

    #[error("eigensolver did not converge for `{0}`")]
    EigenNonConvergence(String),

    #[error("point ({0}, {1}) lies in the collar (distance {2:.3e} < {3:.3e})")]
    CollarPoint(f64, f64, f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent identity data: {0}")]
    Inconsistent(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
