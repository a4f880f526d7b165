//! Bessel functions J_ν and Neumann functions N_ν (= Y_ν) of integer and
//! half-integer order for real non-negative arguments.
//!
//! Regimes:
//! - `t <= 5`: power series (logarithmic series for N_0 and N_1);
//! - `5 < t < 30`: Miller's downward recurrence for J, normalised with
//!   `J_0 + 2 Σ J_2k = 1` (integer orders) or against the closed-form
//!   half-order functions; N_0 and N_1 from their Neumann series in the same
//!   J sequence;
//! - `t >= 30`: Hankel asymptotic expansion of the base orders followed by
//!   upward recurrence (stable while the order stays below t).
//!
//! N is always carried to higher orders by upward recurrence. Half-integer
//! N is seeded from the closed trigonometric forms at every t.

use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

/// Largest supported order.
pub const MAX_ORDER: f64 = 20.0;
/// Largest supported argument.
pub const MAX_ARGUMENT: f64 = 1.0e6;

const SERIES_LIMIT: f64 = 5.0;
const ASYMPTOTIC_LIMIT: f64 = 30.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Capacity of an order sequence (indices `0..MAX_INDEX` above the base order).
pub(crate) const MAX_INDEX: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Family {
    Integer,
    HalfInteger,
}

impl Family {
    pub(crate) fn base(self) -> f64 {
        match self {
            Family::Integer => 0.0,
            Family::HalfInteger => 0.5,
        }
    }
}

/// An order that is an integer or half-integer in `[0, MAX_ORDER]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BesselOrder {
    twice: u32,
}

impl BesselOrder {
    pub fn new(order: f64) -> Result<Self> {
        let twice = 2.0 * order;
        if !order.is_finite() || !(0.0..=MAX_ORDER).contains(&order) || twice.fract() != 0.0 {
            return Err(Error::InvalidOrder(order));
        }
        Ok(Self {
            twice: twice as u32,
        })
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub(crate) fn family(self) -> Family {
        if self.twice.is_multiple_of(2) {
            Family::Integer
        } else {
            Family::HalfInteger
        }
    }

    /// Position above the family's base order.
    pub(crate) fn index(self) -> usize {
        (self.twice / 2) as usize
    }
}

/// J and N at orders `base + 0 ..= base + top`.
pub(crate) struct Sequence {
    pub j: [f64; MAX_INDEX],
    pub y: [f64; MAX_INDEX],
}

pub(crate) fn check_argument(t: f64, allow_zero: bool, what: &'static str) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeArgument(t));
    }
    if t == 0.0 && !allow_zero {
        return Err(Error::Singular(what, t));
    }
    if t > MAX_ARGUMENT {
        return Err(Error::ArgumentTooLarge(t));
    }
    Ok(())
}

/// J_ν(t).
pub fn bessel_j(order: f64, t: f64) -> Result<f64> {
    let order = BesselOrder::new(order)?;
    check_argument(t, true, "J")?;
    let seq = sequence(order.family(), order.index(), t, false);
    Ok(seq.j[order.index()])
}

/// N_ν(t), the Neumann (Weber) function.
pub fn bessel_n(order: f64, t: f64) -> Result<f64> {
    let order = BesselOrder::new(order)?;
    check_argument(t, false, "N")?;
    let seq = sequence(order.family(), order.index(), t, true);
    Ok(seq.y[order.index()])
}

/// dJ_ν/dt, from `C_ν' = (ν/t) C_ν − C_{ν+1}`.
pub fn bessel_j_derivative(order: f64, t: f64) -> Result<f64> {
    Ok(derivatives(order, t, false)?.0)
}

/// dN_ν/dt.
pub fn bessel_n_derivative(order: f64, t: f64) -> Result<f64> {
    Ok(derivatives(order, t, true)?.1)
}

fn derivatives(order: f64, t: f64, want_y: bool) -> Result<(f64, f64)> {
    let order = BesselOrder::new(order)?;
    check_argument(t, false, "derivative")?;
    let i = order.index();
    let seq = sequence(order.family(), i + 1, t, want_y);
    let nu = order.value();
    let dj = nu / t * seq.j[i] - seq.j[i + 1];
    let dy = nu / t * seq.y[i] - seq.y[i + 1];
    Ok((dj, dy))
}

/// Γ(ν + 1) for integer or half-integer ν ≥ 0.
pub(crate) fn gamma_plus_one(nu: f64) -> f64 {
    let x = nu + 1.0;
    let (mut g, mut s) = if (2.0 * nu) as i64 % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while s < x - 0.25 {
        g *= s;
        s += 1.0;
    }
    g
}

/// Power series of J_ν(t); accurate for moderate t.
pub(crate) fn j_series(nu: f64, t: f64) -> f64 {
    let half = 0.5 * t;
    let q = -half * half;
    let mut term = half.powf(nu) / gamma_plus_one(nu);
    let mut sum = term;
    for k in 1..300 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// N_0 and N_1 from their logarithmic power series.
fn y01_series(t: f64) -> (f64, f64) {
    let half = 0.5 * t;
    let q = half * half;
    let log_half = half.ln();
    let j0 = j_series(0.0, t);
    let j1 = j_series(1.0, t);

    // N_0: (2/π)(ln(t/2) + γ) J_0 + (2/π) Σ_{k≥1} (−1)^{k+1} H_k q^k / (k!)²
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut s0 = 0.0;
    // N_1 tail: Σ_{k≥0} (−1)^k [ψ(k+1) + ψ(k+2)] (t/2)^{2k+1} / (k! (k+1)!)
    let mut term1 = half;
    let mut s1 = (2.0 * -EULER_GAMMA + 1.0) * term1;
    for k in 1..300 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        s0 += sign * harmonic * term;

        term1 *= -q / (kf * (kf + 1.0));
        let psi_sum = 2.0 * (harmonic - EULER_GAMMA) + 1.0 / (kf + 1.0);
        s1 += psi_sum * term1;
        if term.abs() < 1e-18 * s0.abs().max(1e-300) && term1.abs() < 1e-18 * s1.abs().max(1e-300) {
            break;
        }
    }
    let y0 = FRAC_2_PI * ((log_half + EULER_GAMMA) * j0 + s0);
    let y1 = -FRAC_2_PI / t + FRAC_2_PI * log_half * j1 - s1 / PI;
    (y0, y1)
}

/// Hankel asymptotic expansion of (J_ν, N_ν) for large t.
fn hankel_asymptotic(nu: f64, t: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * t);
        if a.abs() >= prev || a == 0.0 {
            break;
        }
        prev = a.abs();
        // a_k enters P (even k) or Q (odd k) with alternating signs
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let phase = (0.5 * nu + 0.25) * PI;
    let (st, ct) = t.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = ct * cp + st * sp;
    let sin_chi = st * cp - ct * sp;
    let amp = (FRAC_2_PI / t).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

struct MillerResult {
    j: [f64; MAX_INDEX],
    y01: (f64, f64),
}

/// Miller's downward recurrence.
fn miller(family: Family, top: usize, t: f64) -> MillerResult {
    let base = family.base();
    let reach = t.max(top as f64);
    let start = (reach + 50.0) as usize;

    let mut out = [0.0; MAX_INDEX];
    let mut next = 0.0_f64;
    let mut cur = 1e-30_f64;
    let mut norm = 0.0;
    let mut sy0 = 0.0;
    let mut sy1 = 0.0;
    let minus_half: f64;

    let mut i = start;
    loop {
        if i < MAX_INDEX {
            out[i] = cur;
        }
        if family == Family::Integer {
            if i.is_multiple_of(2) {
                if i == 0 {
                    norm += cur;
                } else {
                    norm += 2.0 * cur;
                    let k = (i / 2) as f64;
                    let sign = if (i / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
                    sy0 += sign * cur / k;
                }
            } else {
                // J_m, m odd, enters Σ(−1)^k (J_{2k−1} − J_{2k+1})/k at k = (m+1)/2 and k = (m−1)/2
                let k_up = i.div_ceil(2) as f64;
                let sign_up = if i.div_ceil(2).is_multiple_of(2) { 1.0 } else { -1.0 };
                sy1 += sign_up * cur / k_up;
                if i >= 3 {
                    let k_dn = ((i - 1) / 2) as f64;
                    let sign_dn = if ((i - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
                    sy1 -= sign_dn * cur / k_dn;
                }
            }
        }
        let prev = 2.0 * (i as f64 + base) / t * cur - next;
        if i == 0 {
            minus_half = prev;
            break;
        }
        next = cur;
        cur = prev;
        i -= 1;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            sy0 *= s;
            sy1 *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }

    let scale = match family {
        Family::Integer => 1.0 / norm,
        Family::HalfInteger => {
            let amp = (FRAC_2_PI / t).sqrt();
            let (s, c) = t.sin_cos();
            if s.abs() > c.abs() {
                amp * s / out[0]
            } else {
                amp * c / minus_half
            }
        }
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    let y01 = if family == Family::Integer {
        let log_term = (0.5 * t).ln() + EULER_GAMMA;
        let y0 = FRAC_2_PI * log_term * out[0] - 2.0 * FRAC_2_PI * sy0 * scale;
        let y1 = -FRAC_2_PI * out[0] / t + FRAC_2_PI * log_term * out[1] + FRAC_2_PI * sy1 * scale;
        (y0, y1)
    } else {
        (0.0, 0.0)
    };
    let _ = top;
    MillerResult { j: out, y01 }
}

fn recur_up(values: &mut [f64; MAX_INDEX], base: f64, t: f64, top: usize) {
    for k in 1..top {
        let nu = base + k as f64;
        values[k + 1] = 2.0 * nu / t * values[k] - values[k - 1];
    }
}

/// J and (optionally) N for orders `base .. base + top`, `top < MAX_INDEX`.
/// Arguments are assumed validated; N entries are meaningless when `t == 0`
/// or `want_y` is false.
pub(crate) fn sequence(family: Family, top: usize, t: f64, want_y: bool) -> Sequence {
    debug_assert!(top < MAX_INDEX);
    let base = family.base();
    let mut j = [0.0; MAX_INDEX];
    let mut y = [0.0; MAX_INDEX];

    match family {
        Family::Integer => {
            if t <= SERIES_LIMIT {
                for (k, v) in j.iter_mut().enumerate().take(top + 1) {
                    *v = j_series(k as f64, t);
                }
                if want_y && t > 0.0 {
                    let (y0, y1) = y01_series(t);
                    y[0] = y0;
                    y[1] = y1;
                }
            } else if t < ASYMPTOTIC_LIMIT {
                let m = miller(family, top, t);
                j = m.j;
                y[0] = m.y01.0;
                y[1] = m.y01.1;
            } else {
                let (j0, y0) = hankel_asymptotic(0.0, t);
                let (j1, y1) = hankel_asymptotic(1.0, t);
                j[0] = j0;
                j[1] = j1;
                y[0] = y0;
                y[1] = y1;
                recur_up(&mut j, base, t, top);
            }
            if want_y && t > 0.0 {
                recur_up(&mut y, base, t, top);
            }
        }
        Family::HalfInteger => {
            if t <= SERIES_LIMIT {
                for (k, v) in j.iter_mut().enumerate().take(top + 1) {
                    *v = j_series(base + k as f64, t);
                }
            } else if t < ASYMPTOTIC_LIMIT {
                j = miller(family, top, t).j;
            } else {
                let amp = (FRAC_2_PI / t).sqrt();
                let (s, c) = t.sin_cos();
                j[0] = amp * s;
                if top >= 1 {
                    // J_{3/2} = J_{1/2}/t − J_{−1/2}
                    j[1] = j[0] / t - amp * c;
                }
                recur_up(&mut j, base, t, top);
            }
            if want_y && t > 0.0 {
                let amp = (FRAC_2_PI / t).sqrt();
                let (s, c) = t.sin_cos();
                y[0] = -amp * c;
                // N_{3/2} = N_{1/2}/t − N_{−1/2},  N_{−1/2} = amp sin t
                y[1] = y[0] / t - amp * s;
                recur_up(&mut y, base, t, top);
            }
        }
    }
    Sequence { j, y }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_validation() {
        assert!(BesselOrder::new(0.5).is_ok());
        assert!(BesselOrder::new(0.25).is_err());
        assert!(BesselOrder::new(-1.0).is_err());
        assert!(BesselOrder::new(MAX_ORDER + 1.0).is_err());
        assert_eq!(BesselOrder::new(3.5).unwrap().index(), 3);
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_plus_one(0.0) - 1.0).abs() < 1e-15);
        assert!((gamma_plus_one(4.0) - 24.0).abs() < 1e-12);
        assert!((gamma_plus_one(0.5) - 0.5 * PI.sqrt()).abs() < 1e-15);
        assert!((gamma_plus_one(1.5) - 0.75 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn origin_values() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(bessel_j(0.0, -1.0), Err(Error::NegativeArgument(_))));
        assert!(matches!(bessel_n(0.0, 0.0), Err(Error::Singular(..))));
        assert!(matches!(bessel_n(1.0, -2.0), Err(Error::NegativeArgument(_))));
        assert!(matches!(bessel_j(0.0, 2.0 * MAX_ARGUMENT), Err(Error::ArgumentTooLarge(_))));
        assert!(bessel_j(0.0, f64::NAN).is_err());
    }

    #[test]
    fn regimes_join_continuously() {
        for &nu in &[0.0, 0.5, 1.0, 2.5, 7.0] {
            for &edge in &[SERIES_LIMIT, ASYMPTOTIC_LIMIT] {
                let a = bessel_j(nu, edge * (1.0 - 1e-15)).unwrap();
                let b = bessel_j(nu, edge * (1.0 + 1e-15)).unwrap();
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "J_{nu} at {edge}: {a} vs {b}");
                let a = bessel_n(nu, edge * (1.0 - 1e-15)).unwrap();
                let b = bessel_n(nu, edge * (1.0 + 1e-15)).unwrap();
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "N_{nu} at {edge}: {a} vs {b}");
            }
        }
    }
}
