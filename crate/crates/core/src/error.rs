use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on different lattices")]
    LatticeMismatch,

    #[error("vertical grid does not match: {0}")]
    GridMismatch(String),

    #[error("weight e^(sigma|xi|) overflows at sigma = {sigma}, |xi| = {xi_norm}")]
    Overflow { sigma: f64, xi_norm: f64 },

    #[error("change of variables is not a diffeomorphism: min dz_rho = {min_dz_rho:.4} (floor {floor})")]
    DiffeomorphismFailure { min_dz_rho: f64, floor: f64 },

    #[error("singular collocation matrix for |xi|^2 = {xi_norm_sq}")]
    SingularCollocation { xi_norm_sq: i64 },

    #[error("fixed point does not contract: ratio {ratio:.3} at iteration {iteration}")]
    NoContraction { iteration: usize, ratio: f64 },

    #[error("fixed point did not reach tolerance {tol:e} in {iterations} iterations (last change {last:e})")]
    NotConverged { iterations: usize, tol: f64, last: f64 },

    #[error("solution blew up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("radius schedule exhausted at t = {t} (sigma = {sigma})")]
    ScheduleExhausted { t: f64, sigma: f64 },

    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
