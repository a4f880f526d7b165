//! Spherical mean projections `g(z, r) = r^{n−1} ∮ f(z + r t̂) dσ(t̂)` with
//! the unnormalised surface measure `dσ`.
//!
//! Balls and bumps are integrated over the exact arc or cap where the
//! integration sphere meets their support; on that set the integrand depends
//! on a single angle, so a short Gauss–Legendre rule is exact or nearly so.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, unit_sphere_area, Component, DetectorSet, Phantom, Point};
use crate::quadrature::{trapezoid, GaussRule};

/// Gauss–Legendre nodes per arc or cap used when the caller has no opinion.
pub const DEFAULT_NODES: usize = 24;

/// Which measure on `S^{n−1}` the stored values use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureConvention {
    /// Unnormalised surface measure, total mass `|S^{n−1}|`.
    Surface,
    /// Probability measure; values are the surface ones divided by `|S^{n−1}|`.
    Normalized,
}

impl MeasureConvention {
    pub fn code(self) -> u8 {
        match self {
            MeasureConvention::Surface => 0,
            MeasureConvention::Normalized => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(MeasureConvention::Surface),
            1 => Ok(MeasureConvention::Normalized),
            other => Err(Error::Format(format!("unknown measure convention {other}"))),
        }
    }
}

/// Uniform radii `r_j = j Δr`, `j = 0..len`, ending at `r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    len: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(invalid(format!("radial grid needs at least 2 samples, got {len}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(invalid(format!("r_max must be positive, got {r_max}")));
        }
        Ok(Self { r_max, len })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.r_max / (self.len - 1) as f64
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|j| self.r(j))
    }
}

/// Samples `g(z_i, r_j)`, row-major by detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    detectors: DetectorSet,
    radial: RadialGrid,
    convention: MeasureConvention,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(
        detectors: DetectorSet,
        radial: RadialGrid,
        convention: MeasureConvention,
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = detectors.len() * radial.len();
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} sinogram values for {} detectors x {} radii",
                values.len(),
                detectors.len(),
                radial.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite sinogram value {bad}")));
        }
        Ok(Self {
            detectors,
            radial,
            convention,
            values,
        })
    }

    pub fn zeros(detectors: DetectorSet, radial: RadialGrid) -> Self {
        let values = vec![0.0; detectors.len() * radial.len()];
        Self {
            detectors,
            radial,
            convention: MeasureConvention::Surface,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.detectors.dim()
    }

    pub fn detectors(&self) -> &DetectorSet {
        &self.detectors
    }

    pub fn radial(&self) -> &RadialGrid {
        &self.radial
    }

    pub fn convention(&self) -> MeasureConvention {
        self.convention
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.radial.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.radial.len())
    }

    /// Same geometry, replaced values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.detectors.clone(), self.radial, self.convention, values)
    }

    /// Values re-expressed in `convention`.
    pub fn to_convention(&self, convention: MeasureConvention) -> Self {
        let area = unit_sphere_area(self.dim());
        let factor = match (self.convention, convention) {
            (a, b) if a == b => 1.0,
            (MeasureConvention::Surface, MeasureConvention::Normalized) => 1.0 / area,
            _ => area,
        };
        Self {
            detectors: self.detectors.clone(),
            radial: self.radial,
            convention,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Integral of one component over the sphere `|x − z| = r` (surface measure,
/// including the `r^{n−1}` Jacobian).
fn sphere_integral(c: &Component, dim: usize, z: &Point, r: f64, rule: &GaussRule) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    match *c {
        Component::Ball {
            center,
            radius,
            amplitude,
        } => radial_sphere_integral(dim, z, r, &center, radius, rule, |_| amplitude, true),
        Component::Bump {
            center,
            radius,
            amplitude,
        } => radial_sphere_integral(
            dim,
            z,
            r,
            &center,
            radius,
            rule,
            |s2| {
                let q = 1.0 - s2 / (radius * radius);
                amplitude * q * q
            },
            false,
        ),
        Component::BoxMode { .. } => {
            if dim == 2 {
                box_mode_circle(c, z, r, rule)
            } else {
                box_mode_sphere(c, z, r, rule)
            }
        }
    }
}

/// Sphere integral of a radial profile `f(|x − c|²)` supported in `|x − c| < ρ`.
#[allow(clippy::too_many_arguments)]
fn radial_sphere_integral(
    dim: usize,
    z: &Point,
    r: f64,
    center: &Point,
    rho: f64,
    rule: &GaussRule,
    profile: impl Fn(f64) -> f64,
    constant: bool,
) -> f64 {
    let d = distance(z, center);
    if r >= d + rho || r <= d - rho {
        return 0.0;
    }
    let area = unit_sphere_area(dim) * r.powi(dim as i32 - 1);
    if d <= 1e-14 * rho {
        return area * profile(r * r);
    }
    // cosine of the half-opening angle of the part inside the support
    let c0 = ((d * d + r * r - rho * rho) / (2.0 * d * r)).clamp(-1.0, 1.0);
    let s2 = |cos: f64| d * d + r * r - 2.0 * d * r * cos;
    if dim == 2 {
        let phi = c0.acos();
        if constant {
            return 2.0 * r * phi * profile(0.0);
        }
        2.0 * r * rule.integrate(0.0, phi, |th| profile(s2(th.cos())))
    } else {
        if constant {
            return 2.0 * PI * r * r * (1.0 - c0) * profile(0.0);
        }
        2.0 * PI * r * r * rule.integrate(c0, 1.0, |u| profile(s2(u)))
    }
}

/// Circle integral of a box eigenfunction: Gauss–Legendre between the angles
/// where the circle crosses the box edges.
fn box_mode_circle(c: &Component, z: &Point, r: f64, rule: &GaussRule) -> f64 {
    let Component::BoxMode { extents, .. } = *c else {
        return 0.0;
    };
    let mut cuts = vec![0.0, 2.0 * PI];
    for axis in 0..2 {
        for edge in [0.0, extents[axis]] {
            let q = (edge - z[axis]) / r;
            if q.abs() <= 1.0 {
                let base = if axis == 0 { q.acos() } else { q.asin() };
                let pair = if axis == 0 { [base, -base] } else { [base, PI - base] };
                cuts.extend(pair.map(|a| a.rem_euclid(2.0 * PI)));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let at = |th: f64| {
        let (s, co) = th.sin_cos();
        [z[0] + r * co, z[1] + r * s, 0.0]
    };
    cuts.windows(2)
        .filter(|w| w[1] - w[0] > 1e-15)
        .map(|w| {
            if c.eval(2, &at(0.5 * (w[0] + w[1]))) == 0.0 {
                return 0.0;
            }
            r * rule.integrate(w[0], w[1], |th| c.eval(2, &at(th)))
        })
        .sum()
}

/// Product rule over the whole sphere; the integrand jumps at the box faces so
/// this converges only at first order.
fn box_mode_sphere(c: &Component, z: &Point, r: f64, rule: &GaussRule) -> f64 {
    let naz = 2 * rule.len();
    let dphi = 2.0 * PI / naz as f64;
    let mut sum = 0.0;
    for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
        let s = (1.0 - u * u).sqrt();
        for k in 0..naz {
            let (sp, cp) = (k as f64 * dphi).sin_cos();
            let x = [z[0] + r * s * cp, z[1] + r * s * sp, z[2] + r * u];
            sum += w * dphi * c.eval(3, &x);
        }
    }
    r * r * sum
}

/// Projections of `p` on `detectors × radial` by per-component quadrature
/// with `nodes` Gauss–Legendre points per arc or cap.
pub fn forward_quadrature(
    p: &Phantom,
    detectors: &DetectorSet,
    radial: RadialGrid,
    nodes: usize,
) -> Result<Sinogram> {
    if p.dim() != detectors.dim() {
        return Err(Error::ShapeMismatch(format!(
            "phantom in dimension {} but detectors in {}",
            p.dim(),
            detectors.dim()
        )));
    }
    let rule = GaussRule::new(nodes)?;
    let dim = p.dim();
    let rows = crate::par::map_indexed(detectors.len(), |i| {
        let z = &detectors.points()[i];
        radial
            .radii()
            .map(|r| {
                p.components()
                    .iter()
                    .map(|c| sphere_integral(c, dim, z, r, &rule))
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    });
    Sinogram::new(
        detectors.clone(),
        radial,
        MeasureConvention::Surface,
        rows.concat(),
    )
}

/// `g(z, r)` at a single centre and radius, by the same per-component rule
/// as [`forward_quadrature`].
pub fn projection_at(p: &Phantom, z: &Point, r: f64, nodes: usize) -> Result<f64> {
    Ok(projection_with(p, z, r, &GaussRule::new(nodes)?))
}

pub(crate) fn projection_with(p: &Phantom, z: &Point, r: f64, rule: &GaussRule) -> f64 {
    p.components()
        .iter()
        .map(|c| sphere_integral(c, p.dim(), z, r, rule))
        .sum()
}

/// Exact projection of a uniform ball: arc length (2-D) or cap area (3-D)
/// times the amplitude.
pub fn forward_analytic_ball(c: &Component, dim: usize, z: &Point, r: f64) -> Result<f64> {
    let Component::Ball {
        center,
        radius,
        amplitude,
    } = *c
    else {
        return Err(invalid("analytic projection needs a uniform ball"));
    };
    if !(2..=3).contains(&dim) {
        return Err(Error::Unsupported(format!("analytic ball projection in dimension {dim}")));
    }
    let d = distance(z, &center);
    if r <= 0.0 || r >= d + radius || r <= d - radius {
        return Ok(0.0);
    }
    if d <= 1e-14 * radius {
        return Ok(amplitude * unit_sphere_area(dim) * r.powi(dim as i32 - 1));
    }
    let c0 = ((d * d + r * r - radius * radius) / (2.0 * d * r)).clamp(-1.0, 1.0);
    Ok(amplitude
        * if dim == 2 {
            2.0 * r * c0.acos()
        } else {
            PI * r * (radius * radius - (d - r) * (d - r)) / d
        })
}

/// Relative defect of `∫ g(z_i, r) dr = ∫ f dx` (trapezoid in `r`).
pub fn g_volume_identity_check(p: &Phantom, s: &Sinogram, i: usize) -> Result<f64> {
    if i >= s.detectors().len() {
        return Err(invalid(format!("detector index {i} out of range")));
    }
    let s = s.to_convention(MeasureConvention::Surface);
    let lhs = trapezoid(s.row(i), s.radial().step());
    let rhs = p.integral();
    Ok((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sphere_detectors;

    #[test]
    fn ball_at_detector_centre_is_a_full_sphere() {
        let c = Component::ball([0.0; 3], 0.5, 2.0);
        let z = [0.0; 3];
        let g = forward_analytic_ball(&c, 3, &z, 0.3).unwrap();
        assert!((g - 2.0 * 4.0 * PI * 0.09).abs() < 1e-14);
        assert_eq!(forward_analytic_ball(&c, 3, &z, 0.6).unwrap(), 0.0);
    }

    #[test]
    fn cap_formula_matches_quadrature() {
        let rule = GaussRule::new(8).unwrap();
        let c = Component::ball([0.1, 0.2, -0.1], 0.4, 1.5);
        let z = [1.0, 0.0, 0.0];
        let d = distance(&z, &[0.1, 0.2, -0.1]);
        for &r in &[d - 0.3, d, d + 0.35] {
            let a = forward_analytic_ball(&c, 3, &z, r).unwrap();
            let q = sphere_integral(&c, 3, &z, r, &rule);
            assert!((a - q).abs() < 1e-12 * a.abs().max(1.0), "r {r}: {a} vs {q}");
        }
    }

    #[test]
    fn conventions_differ_by_sphere_area() {
        let d = sphere_detectors(2, 1.0, [8, 1]).unwrap();
        let p = Phantom::new(2, vec![Component::bump([0.1, 0.0, 0.0], 0.3, 1.0)]).unwrap();
        let s = forward_quadrature(&p, &d, RadialGrid::new(2.0, 33).unwrap(), 16).unwrap();
        let n = s.to_convention(MeasureConvention::Normalized);
        let back = n.to_convention(MeasureConvention::Surface);
        for (a, b) in s.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((n.values()[40] * 2.0 * PI - s.values()[40]).abs() < 1e-14);
    }
}
