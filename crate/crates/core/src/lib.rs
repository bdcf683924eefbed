//! Finite-volume solver for systems of balance laws coupled through a
//! convolution term, with laser-cutting, conveyor-belt and blow-up models.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod models;
pub mod nonlocal;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
