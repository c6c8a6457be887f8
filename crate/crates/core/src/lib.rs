//! Numerical laboratory for the two-dimensional one-component plasma.
//!
//! Energies use the 2D Coulomb kernel `−log|x|`. Reduced units put the
//! neutralizing background at density 1 with confinement `π|x|²/2`.

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod groundstate;
pub mod io;
pub mod meanfield;
pub mod parallel;
pub mod plasma;
pub mod sampler;
pub mod screening;
pub(crate) mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Point, PointConfiguration};
