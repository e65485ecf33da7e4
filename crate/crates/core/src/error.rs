use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite level-set value {value} at node ({i},{j},{k})")]
    NonFiniteLevelSet { i: isize, j: isize, k: isize, value: f64 },

    #[error("unsupported cut-cell topology at cell ({i},{j},{k}): {reason}")]
    UnsupportedTopology { i: isize, j: isize, k: isize, reason: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("poisson solve did not converge: {iterations} iterations, relative residual {residual:e}")]
    PoissonDiverged { iterations: usize, residual: f64 },

    #[error("solver aborted at step {step}: {reason}")]
    SolverAbort { step: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
