use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// The constraint-side matrix of a generalized eigenproblem is not
    /// positive definite.
    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e} <= floor {floor:e}")]
    NotDefinite { min_eigenvalue: f64, floor: f64 },

    #[error("rank deficiency: {0}")]
    Rank(String),

    /// A computed eigenpair failed its residual or orthonormality bound.
    #[error("numerical quality check failed: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
