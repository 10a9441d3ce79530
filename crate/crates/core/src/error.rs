use thiserror::Error;

#[derive(Debug, Error)]
pub enum MhdError {
    #[error("invalid mesh resolution {0}: need at least one cell per side")]
    InvalidResolution(usize),

    #[error("no quadrature rule of degree {0} (maximum is {1})")]
    UnsupportedQuadrature(usize, usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("residual {residual:e} exceeds tolerance {tol:e} after solve")]
    Residual { residual: f64, tol: f64 },

    #[error("numerical blow-up at step {step}: {what}")]
    BlowUp { step: usize, what: String },

    #[error("energy increased at step {step}: {before:.17e} -> {after:.17e}")]
    EnergyIncrease { step: usize, before: f64, after: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MhdError>;
