//! Special functions: Bessel/Neumann functions and the normalised radial
//! kernels built from them.

mod bessel;
mod kernel;

pub use bessel::{
    bessel_j, bessel_j_derivative, bessel_n, bessel_n_derivative, BesselOrder, MAX_ARGUMENT,
    MAX_ORDER,
};
pub use kernel::{
    green_constant, kernel, kernel_derivative, kernel_j, kernel_with_derivative,
    wronskian_defect, KernelOrder, KernelValue,
};
pub(crate) use bessel::gamma_plus_one;
pub(crate) use kernel::{kernel_unchecked, kernel_with_derivative_unchecked};
