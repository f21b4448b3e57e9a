//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A problem or weight specification violates its documented invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Evaluation point outside `[0, L]`.
    #[error("x = {x} lies outside the domain [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    /// Iterate magnitude exceeded the guard used by the integral operators.
    #[error("magnitude fault: |u| exceeds {cap:e}")]
    MagnitudeFault { cap: f64 },

    /// Adaptive step control underflowed; distinct from a capped blow-up.
    #[error("integration fault at x = {x}: {reason}")]
    IntegrationFault { x: f64, reason: String },

    /// A slope-scan bracket could not be resolved into zeros after the
    /// configured refinement rounds.
    #[error("unresolved scan bracket in s = [{lo:e}, {hi:e}] after {rounds} refinement rounds")]
    Unresolved { lo: f64, hi: f64, rounds: usize },

    /// A per-interval sup sits too close to the box threshold for a degree
    /// to be well defined.
    #[error(
        "margin violation: sup over positivity interval {interval} is {sup:e}, \
         within {band:e} of rho = {rho:e}"
    )]
    MarginViolation {
        interval: usize,
        sup: f64,
        rho: f64,
        band: f64,
    },

    /// Classification refused: a per-interval sup lies inside the dead band
    /// around the box threshold.
    #[error(
        "band hit: sup over positivity interval {interval} ({sup:e}) lies in the \
         dead band around rho = {rho:e}"
    )]
    BandHit { interval: usize, sup: f64, rho: f64 },

    /// The multistart produced no solutions where some must exist.
    #[error("suite failure: {0}")]
    SuiteFailure(String),

    /// An iterative solver failed to converge.
    #[error("nonconvergence: {0}")]
    NonConvergence(String),

    /// Parameter outside its documented range.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
