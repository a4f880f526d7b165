//! Spherical mean Radon transform toolkit.
//!
//! - [`forward`]: projections `g(z, r)` of a phantom over spheres centred on a
//!   detector surface;
//! - [`invert_closed`]: filtration + divergence-form backprojection for
//!   detectors on a sphere (2-D, 3-D and general n-D filters);
//! - [`invert_series`]: Dirichlet-eigenfunction series inversion for
//!   box-shaped detector surfaces;
//! - [`identities`]: numerical checks of the analytic identities the
//!   inversion formulas rest on;
//! - [`io`], [`config`], [`metrics`], [`cli`]: file formats, run
//!   configuration and the `smrt` binary;
//! - [`specfun`]: Bessel/Neumann functions and the normalised kernels.

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod identities;
pub mod invert_closed;
pub mod invert_series;
pub mod io;
pub mod metrics;
mod par;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
