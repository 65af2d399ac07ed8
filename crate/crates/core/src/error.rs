use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("level {level} out of range 1..={max}")]
    Level { level: usize, max: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("operator is not in the flag algebra (deviation {deviation:.3e} at level {level})")]
    NotInFlagAlgebra { level: usize, deviation: f64 },
    #[error("Gram matrix is not positive: min eigenvalue {min_eigenvalue:.3e} below -{threshold:.3e}")]
    NotAdmissible { min_eigenvalue: f64, threshold: f64 },
    #[error("slot action does not preserve the null space: slot {p}, basis element {basis_index}, residual {residual:.3e}")]
    WellDefinedness { p: usize, basis_index: usize, residual: f64 },
    #[error("constructed triple violates {what} (residual {residual:.3e})")]
    InvariantViolation { what: String, residual: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inconsistent: {what} (residual {residual:.3e})")]
    Inconsistent { what: String, residual: f64 },
    #[error("psi is not dominated by phi: {0}")]
    NotDominated(String),
    #[error("operator is not in the commutant (residual {residual:.3e})")]
    NotInCommutant { residual: f64 },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
