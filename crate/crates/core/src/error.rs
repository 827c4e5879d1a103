use thiserror::Error;

/// Errors raised by the measure, Hamiltonian and solver layers.
///
/// Numeric payloads are carried as `f64` regardless of the working scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("momentum is zero; the singular integrand is undefined")]
    ZeroMomentum,
    #[error("denominator 1 + h - mu(p) = {offset} is not positive")]
    DenominatorNotPositive { offset: f64 },
    #[error("could not bracket the Hamiltonian at |p| = {p_norm} within 60 doublings")]
    NoBracket { p_norm: f64 },
    #[error("maximizer set at |p| = {p_norm} is not a single point ({count} candidates)")]
    DegenerateMaximizer { p_norm: f64, count: usize },
    #[error("velocity lies outside the convex hull of the support (excess {excess})")]
    OutsideHull { excess: f64 },
    #[error("time step {dt} exceeds the CFL limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("a priori bound violated: {what} = {value} exceeds {bound}")]
    BoundViolation { what: &'static str, value: f64, bound: f64 },
    #[error("|phi0|_inf / eps = {ratio} exceeds 600; use the potential formulation")]
    UnderflowRisk { ratio: f64 },
    #[error("malformed grid field data: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
