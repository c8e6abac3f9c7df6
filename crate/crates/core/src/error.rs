use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate plane spec: {0}")]
    DegenerateSpec(String),

    #[error("empty set: no dyadic cube at level 0 meets the direction set")]
    EmptySet,

    #[error("quadrature failed to reach tolerance within {panels} panels (estimate {estimate:e})")]
    QuadratureFailure { panels: usize, estimate: f64 },

    #[error("ODE integration stalled at r = {r} (step {step:e})")]
    IntegrationFailure { r: f64, step: f64 },

    #[error("bracket violation at r = {r}: v = {v}, allowed [{lower}, {upper}]")]
    BracketViolation { r: f64, v: f64, lower: f64, upper: f64 },

    #[error("poor convergence of asymptotic constant: successive estimates differ by {0:e}")]
    PoorConvergence(f64),

    #[error("radius {r} outside tabulated range [0, {r_max}]")]
    OutOfRange { r: f64, r_max: f64 },

    #[error("overflow: exponent {0} too large without log mode")]
    Overflow(f64),

    #[error("Newton iteration did not converge after {iters} iterations (residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("sandwich violated at ({x}, {y}): field {value}, bounds [{lower}, {upper}]")]
    SandwichViolation {
        x: f64,
        y: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::DegenerateSpec(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
