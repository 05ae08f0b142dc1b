// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alphabet;
pub mod beam;
pub mod bisection;
pub mod cache;
pub mod continuous;
pub mod coupling;
pub mod error;
pub mod exhaustive;
pub mod fractional;
pub mod geometry;
pub mod harness;
pub mod quadrature;
pub mod qubo;
pub mod sa;

pub use error::{Error, Result};
