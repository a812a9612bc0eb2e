use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("operator is not positive definite (eigenvalue bound {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("contraction norm {norm} is not strictly below 1")]
    NotContraction { norm: f64 },

    #[error(
        "ill-conditioned composition: condition number of the middle block is {condition:.3e}"
    )]
    IllConditioned { condition: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zeta continuation has a pole at s = {pole} (requested s = {s})")]
    ZetaPole { s: f64, pole: f64 },

    #[error("series did not converge: {0}")]
    NotConverged(String),

    #[error("quadrature order {order} is too low for a degree-{degree} integrand")]
    QuadratureOrder { order: usize, degree: usize },

    #[error("incompatible circles at a glued pair: {0}")]
    IncompatibleCircles(String),

    #[error("port error: {0}")]
    Port(String),

    #[error("not a Lagrangian subspace: {0}")]
    NotLagrangian(String),

    #[error("scene error: {0}")]
    Scene(String),
}
