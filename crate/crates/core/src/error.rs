use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}] after {subdivisions} subdivisions (error estimate {estimate:e})")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        subdivisions: usize,
        estimate: f64,
    },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("non-finite ODE state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("eigen iteration did not converge after {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("expression error at byte {pos}: {msg}")]
    Expression { pos: usize, msg: String },

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("geodesic from x = {x} left the chart region at t = {exit_time}")]
    RayExit { x: f64, exit_time: f64 },

    #[error("{0} interior grid nodes are unreachable from the boundary")]
    Unreachable(usize),

    #[error("ray from x = {x} ended at t = {end} before leaving the distance-realising set")]
    RayTooShort { x: f64, end: f64 },

    #[error("steepest descent stagnated at ({t}, {x})")]
    DescentStagnation { t: f64, x: f64 },

    #[error("missing data: {0}")]
    Missing(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
