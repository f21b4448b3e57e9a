//! Numerical laboratory for the Dirichlet problem
//!
//! ```text
//!     -u'' = lambda * u + a(x) * u^p   on (0, L),    u(0) = u(L) = 0,
//! ```
//!
//! with `p > 1` and a sign-changing weight `a(x)` that is positive on `n`
//! humps separated by intervals where it is negative. For strongly negative
//! `lambda` the problem carries one positive solution per nonempty subset of
//! humps (2^n - 1 in total), each distinguished by which humps host a large
//! bump. This crate finds those solutions by two independent routes (a
//! shooting scan in the initial slope and a damped Newton multistart on the
//! finite-difference system), classifies them into their bump boxes, computes
//! calibrated signed shooting degrees per box, traces the primary solution
//! branch from its bifurcation point, and runs the verification sweeps that
//! the CLI drivers expose.
//!
//! Core numerics are generic over the scalar type through [`Real`]; the `f64`
//! aliases below are what the drivers and IO layers use.

pub mod classify;
pub mod continuation;
pub mod error;
pub mod greens;
pub mod grid;
pub mod index_set;
pub mod io;
pub mod ivp;
pub mod linalg;
pub mod newton;
pub mod shooting;
pub mod weight;

pub use error::{Error, Result};
pub use index_set::IndexSet;

/// Scalar type for the core numerics: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting an `f64` literal into the scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    /// Lossy view as `f64`, used by reporting and IO code.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FloatConst
        + num_traits::FromPrimitive
        + num_traits::ToPrimitive
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + std::fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}

pub type Grid64 = grid::Grid<f64>;
pub type Profile64 = grid::GridProfile<f64>;
pub type Weight64 = weight::Weight<f64>;
pub type BumpWeight64 = greens::BumpWeight<f64>;
pub type SolutionSet64 = shooting::SolutionSet<f64>;
pub type Branch64 = continuation::Branch<f64>;
