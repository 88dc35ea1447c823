use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point is off the boundary sphere: |r - R| = {distance:e}")]
    OffSphere { distance: f64 },

    #[error("shape mismatch: expected {expected} samples, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("angular grid too coarse: {n_phi} samples cannot resolve |m| <= {m_max}")]
    AngularResolution { n_phi: usize, m_max: usize },

    #[error("mode coefficients are not conjugate symmetric (defect {defect:e})")]
    NotConjugateSymmetric { defect: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error(
        "incompatible data: |∫f̃ - ∫στ| = {residual:e} exceeds threshold {threshold:e}"
    )]
    IncompatibleData { residual: f64, threshold: f64 },

    #[error("singular system for mode m = {mode} (condition estimate {condition:e}): {detail}")]
    SingularSystem {
        mode: i32,
        condition: f64,
        detail: String,
    },

    #[error("iteration did not converge after {iterations} steps (best estimates {estimates:?})")]
    NoConvergence {
        iterations: usize,
        estimates: Vec<f64>,
    },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
