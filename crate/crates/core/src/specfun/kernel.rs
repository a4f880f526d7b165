//! Dimension-normalised radial kernels
//! `J_(k)(t) = J_{n/2+k-1}(t) / t^{n/2-1}` and `N_(k)(t) = N_{n/2+k-1}(t) / t^{n/2-1}`.
//!
//! With `k = 0` these are the kernels `J(t)`, `N(t)` for which `J(λ|x|)` is an
//! entire solution of the n-dimensional Helmholtz equation and `i c(λ,n) H(λ|x|)`,
//! `H = J + iN`, is the outgoing free-space Green's function.

use std::f64::consts::PI;

use super::bessel::{check_argument, gamma_plus_one, sequence, BesselOrder, Family, MAX_ORDER};
use crate::error::{invalid, Error, Result};

const SERIES_LIMIT: f64 = 5.0;

/// Dimension `n ≥ 2` and order shift `k ≥ 0`; the underlying Bessel order is
/// `ν = n/2 + k − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelOrder {
    dim: usize,
    shift: usize,
}

impl KernelOrder {
    pub fn new(dim: usize, shift: usize) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("kernel dimension must be >= 2, got {dim}")));
        }
        let order = Self { dim, shift };
        // one extra order is needed for derivatives
        if order.bessel_order() + 1.0 > MAX_ORDER {
            return Err(Error::InvalidOrder(order.bessel_order()));
        }
        Ok(order)
    }

    /// The plain kernel `J(t)` / `N(t)` of dimension `dim`.
    pub fn base(dim: usize) -> Result<Self> {
        Self::new(dim, 0)
    }

    pub fn dim(self) -> usize {
        self.dim
    }

    pub fn shift(self) -> usize {
        self.shift
    }

    pub fn bessel_order(self) -> f64 {
        self.dim as f64 / 2.0 + self.shift as f64 - 1.0
    }

    /// Exponent `n/2 − 1` of the normalising power.
    pub fn power(self) -> f64 {
        self.dim as f64 / 2.0 - 1.0
    }

    fn bessel(self) -> BesselOrder {
        BesselOrder::new(self.bessel_order()).expect("validated in KernelOrder::new")
    }
}

/// Regular and singular kernel values at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub j: f64,
    pub y: f64,
}

/// `2^{-p} Σ_m (−1)^m (t/2)^{2m+k} / (m! Γ(m+ν+1))`, the regular kernel
/// without the removable 0/0 at the origin.
fn j_kernel_series(order: KernelOrder, t: f64) -> f64 {
    let nu = order.bessel_order();
    let k = order.shift() as i32;
    let half = 0.5 * t;
    let q = -half * half;
    let mut term = half.powi(k) / gamma_plus_one(nu);
    let mut sum = term;
    for m in 1..300 {
        let m = m as f64;
        term *= q / (m * (m + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2f64.powf(-order.power())
}

/// Kernel values at shifts `k` and `k + 1`.
fn kernel_pair(order: KernelOrder, t: f64, want_y: bool) -> [KernelValue; 2] {
    let bessel = order.bessel();
    let i = bessel.index();
    let p = order.power();
    let seq = sequence(bessel.family(), i + 1, t, want_y && t > 0.0);
    let scale = if t > 0.0 { t.powf(-p) } else { 0.0 };
    let mut out = [
        KernelValue {
            j: seq.j[i] * scale,
            y: seq.y[i] * scale,
        },
        KernelValue {
            j: seq.j[i + 1] * scale,
            y: seq.y[i + 1] * scale,
        },
    ];
    if t <= SERIES_LIMIT {
        let next = KernelOrder {
            dim: order.dim,
            shift: order.shift + 1,
        };
        out[0].j = j_kernel_series(order, t);
        out[1].j = j_kernel_series(next, t);
    }
    out
}

/// Regular kernel `J_(k)(t)`, including the limit value at `t = 0`.
pub fn kernel_j(order: KernelOrder, t: f64) -> Result<f64> {
    check_argument(t, true, "J kernel")?;
    Ok(kernel_pair(order, t, false)[0].j)
}

/// Both kernels at `t > 0`; the singular kernel makes `t = 0` an error.
pub fn kernel(order: KernelOrder, t: f64) -> Result<KernelValue> {
    check_argument(t, false, "N kernel")?;
    Ok(kernel_pair(order, t, true)[0])
}

/// `d/dt` of both kernels, via `J_(k)' = (k/t) J_(k) − J_(k+1)` (same for N).
pub fn kernel_derivative(order: KernelOrder, t: f64) -> Result<KernelValue> {
    Ok(kernel_with_derivative(order, t)?.1)
}

/// Kernel values and their derivatives at `t > 0`.
pub fn kernel_with_derivative(order: KernelOrder, t: f64) -> Result<(KernelValue, KernelValue)> {
    check_argument(t, false, "kernel derivative")?;
    let [v, next] = kernel_pair(order, t, true);
    let k = order.shift() as f64;
    let d = KernelValue {
        j: k / t * v.j - next.j,
        y: k / t * v.y - next.y,
    };
    Ok((v, d))
}

/// Constant in `Φ(x, y, λ) = i c(λ, n) H(λ|x − y|)`:
/// `c(λ, n) = λ^{n−2} / (4 (2π)^{n/2−1})`.
pub fn green_constant(dim: usize, lambda: f64) -> Result<f64> {
    if dim < 2 {
        return Err(invalid(format!("dimension must be >= 2, got {dim}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let n = dim as f64;
    Ok(lambda.powf(n - 2.0) / (4.0 * (2.0 * PI).powf(n / 2.0 - 1.0)))
}

/// `J_ν N_ν' − J_ν' N_ν − 2/(πt)`; zero up to rounding for the classical
/// Wronskian `W[J_ν, N_ν](t) = 2/(πt)`.
pub fn wronskian_defect(order: f64, t: f64) -> Result<f64> {
    let order = BesselOrder::new(order)?;
    if order.value() + 1.0 > MAX_ORDER {
        return Err(Error::InvalidOrder(order.value()));
    }
    check_argument(t, false, "Wronskian")?;
    let i = order.index();
    let nu = order.value();
    let seq = sequence(order.family(), i + 1, t, true);
    let (j, y) = (seq.j[i], seq.y[i]);
    let dj = nu / t * j - seq.j[i + 1];
    let dy = nu / t * y - seq.y[i + 1];
    Ok(j * dy - dj * y - 2.0 / (PI * t))
}

/// Convenience used by hot loops that already validated their arguments.
#[inline]
pub(crate) fn kernel_unchecked(order: KernelOrder, t: f64) -> KernelValue {
    kernel_pair(order, t, true)[0]
}

#[inline]
pub(crate) fn kernel_with_derivative_unchecked(
    order: KernelOrder,
    t: f64,
) -> (KernelValue, KernelValue) {
    let [v, next] = kernel_pair(order, t, true);
    let k = order.shift() as f64;
    (
        v,
        KernelValue {
            j: k / t * v.j - next.j,
            y: k / t * v.y - next.y,
        },
    )
}

#[allow(dead_code)]
pub(crate) fn family_of(order: KernelOrder) -> Family {
    order.bessel().family()
}
