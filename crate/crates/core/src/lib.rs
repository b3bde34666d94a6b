//! Viscous shock profiles of a fully ionized two-fluid plasma.

// NaN-rejecting comparisons are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod diagnostics;
pub mod error;
pub mod jump;
pub mod layer;
pub mod linalg;
pub mod ode;
pub mod profile;
pub mod state;
pub mod twofluid;

pub use error::{IntegrationError, Result, ShockError};
