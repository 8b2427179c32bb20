use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric is not Hermitian positive definite (smallest eigenvalue {eigenvalue:.3e})")]
    MetricNotPositive { eigenvalue: f64 },

    #[error("metric is not Hermitian: entry ({row},{col}) differs from its conjugate transpose by {defect:.3e}")]
    MetricNotHermitian { row: usize, col: usize, defect: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("fields live on different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("g + complex Hessian is not positive definite at node {node} (smallest eigenvalue {eigenvalue:.3e})")]
    NotKahler { node: usize, eigenvalue: f64 },

    #[error("Newton stagnated after {iterations} iterations (residual history {history:?})")]
    Stagnation { iterations: usize, history: Vec<f64> },

    #[error("solve failed at beta = {beta}: {source}")]
    AtBeta {
        beta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("projected Gauss-Seidel did not converge in {sweeps} sweeps (residual {residual:.3e})")]
    PsorNonConvergence { sweeps: usize, residual: f64 },

    #[error("contact set is empty")]
    EmptyContact,

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error("checksum mismatch for {path}")]
    Checksum { path: PathBuf },

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_beta(self, beta: f64) -> Self {
        Error::AtBeta {
            beta,
            source: Box::new(self),
        }
    }
}
