use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("singular system: {0}")]
    Singular(String),
    #[error("bordered system for mode {mode} is ill-conditioned (estimate {estimate:.3e})")]
    IllConditioned { mode: usize, estimate: f64 },
    #[error("no convergence after {iterations} iterations (gradient norm {gradient:.3e})")]
    NoConvergence { iterations: usize, gradient: f64 },
    #[error("bubble centers collapsed (gap {gap:.3e})")]
    CollapsedCenters { gap: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
