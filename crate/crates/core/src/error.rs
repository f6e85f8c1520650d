//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Strong convexity of F²/2 failed at the reported point of the unit bundle.
    #[error("convexity violation at x={x:?}, v={v:?} (A = {a:.3e})")]
    ConvexityViolation { x: [f64; 3], v: [f64; 3], a: f64 },

    #[error("metric derivative requested on the zero section")]
    ZeroSection,

    #[error("integrator step collapsed below 1e-12 at t={t:.6e}")]
    Stiffness { t: f64 },

    #[error("shooting failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConnection { iterations: usize, residual: f64 },

    #[error("closed-geodesic refinement diverged (residual history: {residuals:?})")]
    RefinementFailed { residuals: Vec<f64> },

    /// The two independent routes to the normal velocity disagree; this
    /// signals a bug in the derivative stack, not in the caller.
    #[error("normal velocity paths disagree by {max_dev:.3e} at sample {at}")]
    VelocityInconsistency { max_dev: f64, at: usize },

    #[error("loop lost embeddedness at t={t:.6e}")]
    EmbeddednessLost { t: f64 },

    #[error("time budget exhausted at t={t:.6e}: {what}")]
    Timeout { t: f64, what: String },

    #[error("broken loop left its domain: segment {segment} reached length {length:.6e}")]
    DomainExit { segment: usize, length: f64 },

    #[error("degenerate index: Jacobi zero at period endpoint with |f'| = {fdot:.3e}")]
    DegenerateIndex { fdot: f64 },

    #[error("index relation violated: {0}")]
    RelationViolation(String),

    #[error("monodromy determinant {det:.8} deviates from 1 beyond tolerance")]
    Symplecticity { det: f64 },

    #[error("annulus chart construction failed: {0}")]
    Chart(String),

    #[error("tangential section crossing (|s| = {s_hit:.8})")]
    GrazingEvent { s_hit: f64 },

    #[error("boundary extension failed: {0}")]
    Extension(String),

    #[error("lift discontinuity: jump of {jump:.3e} between adjacent s-samples")]
    LiftError { jump: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
