//! Interpolation of measure-valued data by optimal-transport splines.
//!
//! Observations at increasing times are coupled sequentially by Monge maps,
//! and each coupled trajectory is interpolated by a natural cubic (or
//! piecewise-linear) spline. Gaussian, 1D and point-cloud families are
//! supported, plus thin-plate fields of 1D measures over planar sites.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bures;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod harness;
pub mod normal;
pub mod spline1d;
pub mod thinplate;
pub mod transport_spline;

pub use error::{Error, Result};
