use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock truncation too small: norm deficit {deficit:.3e} (cutoff {cutoff})")]
    Truncation { deficit: f64, cutoff: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("label {label} is inconsistent with the probe configuration")]
    LabelMismatch { label: String },

    #[error("quadrature grid coverage {coverage:.12} deviates from unit probability mass")]
    GridCoverage { coverage: f64 },

    #[error("series did not converge after {terms} terms")]
    NonConvergence { terms: usize },

    #[error("integrator step fell below {min_step:.3e} at tau = {tau:.6}")]
    StepSizeUnderflow { tau: f64, min_step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
