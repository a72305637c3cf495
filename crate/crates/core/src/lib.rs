//! Numerical laboratory for renormalized functionals, Ricci–DeTurck flow and
//! Łojasiewicz–Simon inequalities on rotationally symmetric asymptotically
//! hyperbolic metrics.

pub mod elliptic;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod lojasiewicz;

pub use error::{Error, Result};
