use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("environment has no open edges; no cluster to extract")]
    EmptyCluster,

    #[error("domain does not intersect the cluster")]
    EmptyDomain,

    #[error("killed operator is singular: {0}")]
    SingularOperator(String),

    #[error("solver did not reach tolerance: residual {residual:e} > {tol:e}")]
    SolverTolerance { residual: f64, tol: f64 },

    #[error("dense eigensolver cap exceeded: {size} > {cap}")]
    EigenCapExceeded { size: usize, cap: usize },

    #[error("mollifier support B({center:?}, {eps}) escapes the unit square")]
    SupportEscapes { center: [f64; 2], eps: f64 },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("all importance weights underflowed to zero")]
    WeightUnderflow,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularOperator(_)
                | Error::SolverTolerance { .. }
                | Error::WeightUnderflow
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
