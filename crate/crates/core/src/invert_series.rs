//! Eigenfunction-series inversion for detectors on the boundary of a box
//! `Ω = [0, L_1] × … × [0, L_n]`.
//!
//! With Dirichlet eigenpairs `(λ_m², u_m)` every `u_m` has the boundary
//! representation `u_m(x) = i c(λ_m, n) ∮ H(λ_m |x − z|) ∂_n u_m(z) ds(z)`,
//! hence `α_m = ∫ f u_m = i c ∮ ∂_n u_m(z) ∫ g(z, r) H(λ_m r) dr ds(z)`.
//! The real part gives `α_m`; the imaginary part must vanish and is kept as a
//! diagnostic.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::forward::{forward_quadrature, MeasureConvention, RadialGrid, Sinogram};
use crate::geometry::{box_detectors, distance, DetectorSet, ImageGrid, Layout, Phantom, Point};
use crate::quadrature::trapezoid_weight;
use crate::specfun::{green_constant, kernel_unchecked, KernelOrder};

/// Relative tolerance for deciding that a point lies on a face.
const FACE_TOL: f64 = 1e-12;

/// The box `[0, L_1] × … × [0, L_n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    dim: usize,
    extents: Point,
}

impl BoxDomain {
    pub fn new(dim: usize, extents: Point) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Unsupported(format!("box domain in dimension {dim}")));
        }
        if extents[..dim].iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(invalid(format!("box extents must be positive, got {extents:?}")));
        }
        let mut extents = extents;
        extents[dim..].iter_mut().for_each(|l| *l = 0.0);
        Ok(Self { dim, extents })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(dim, [1.0; 3])
    }

    /// Domain of a box detector layout.
    pub fn of(detectors: &DetectorSet) -> Result<Self> {
        match *detectors.layout() {
            Layout::Box { extents, .. } => Self::new(detectors.dim(), extents),
            Layout::Sphere { .. } => Err(Error::Unsupported("series inversion needs box detectors".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> Point {
        self.extents
    }

    pub fn diameter(&self) -> f64 {
        self.extents.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim).all(|k| (0.0..=self.extents[k]).contains(&x[k]))
    }

    /// `λ_cutoff = π N / (2 L_max)`: modes finer than an `N`-point grid can
    /// resolve are dropped.
    pub fn default_cutoff(&self, points_per_axis: usize) -> f64 {
        let l_max = self.extents.iter().cloned().fold(0.0, f64::max);
        PI * points_per_axis as f64 / (2.0 * l_max)
    }

    /// All indices with `λ_m ≤ cutoff`, by increasing `λ_m`.
    pub fn admissible(&self, cutoff: f64) -> Vec<EigenIndex> {
        let top: Vec<usize> = (0..3)
            .map(|k| {
                if k < self.dim {
                    (cutoff * self.extents[k] / PI).floor() as usize
                } else {
                    1
                }
            })
            .collect();
        let mut out = Vec::new();
        for m0 in 1..=top[0] {
            for m1 in 1..=top[1] {
                for m2 in 1..=top[2] {
                    let m = [m0, m1, if self.dim == 3 { m2 } else { 0 }];
                    let idx = EigenIndex { m, domain: *self };
                    if idx.lambda() <= cutoff {
                        out.push(idx);
                    }
                }
            }
        }
        out.sort_by(|a, b| a.lambda().total_cmp(&b.lambda()));
        out
    }
}

/// Multi-index `m` of the Dirichlet eigenpair
/// `u_m(x) = Π sqrt(2/L_k) sin(m_k π x_k / L_k)`, `λ_m = π |m/L|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenIndex {
    m: [usize; 3],
    domain: BoxDomain,
}

impl EigenIndex {
    pub fn new(domain: &BoxDomain, m: &[usize]) -> Result<Self> {
        if m.len() != domain.dim || m.contains(&0) {
            return Err(invalid(format!(
                "eigen index {m:?} must have {} positive entries",
                domain.dim
            )));
        }
        let mut mm = [0; 3];
        mm[..m.len()].copy_from_slice(m);
        Ok(Self {
            m: mm,
            domain: *domain,
        })
    }

    pub fn m(&self) -> &[usize] {
        &self.m[..self.domain.dim]
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn lambda(&self) -> f64 {
        PI * (0..self.domain.dim)
            .map(|k| (self.m[k] as f64 / self.domain.extents[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn factor(&self, k: usize, x: f64) -> (f64, f64) {
        let l = self.domain.extents[k];
        let w = self.m[k] as f64 * PI / l;
        let a = (2.0 / l).sqrt();
        let (s, c) = (w * x).sin_cos();
        (a * s, a * w * c)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (0..self.domain.dim).map(|k| self.factor(k, x[k]).0).product()
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate().take(self.domain.dim) {
            *gk = (0..self.domain.dim)
                .map(|j| {
                    let (v, d) = self.factor(j, x[j]);
                    if j == k {
                        d
                    } else {
                        v
                    }
                })
                .product();
        }
        g
    }

    /// Outward normal derivative at a boundary point that lies on exactly
    /// one face.
    pub fn normal_derivative(&self, z: &Point) -> Result<f64> {
        let d = &self.domain;
        let mut face = None;
        let mut hits = 0;
        for k in 0..d.dim {
            let tol = FACE_TOL * d.extents[k];
            if z[k] < -tol || z[k] > d.extents[k] + tol {
                return Err(Error::OffBoundary(*z));
            }
            if z[k].abs() <= tol {
                face = Some((k, -1.0));
                hits += 1;
            } else if (z[k] - d.extents[k]).abs() <= tol {
                face = Some((k, 1.0));
                hits += 1;
            }
        }
        match (face, hits) {
            (Some((k, sign)), 1) => Ok(sign * self.gradient(z)[k]),
            (None, _) => Err(Error::OffBoundary(*z)),
            _ => Err(Error::CornerPoint(*z)),
        }
    }
}

pub fn eigenfunction(idx: &EigenIndex, x: &Point) -> f64 {
    idx.eval(x)
}

pub fn eigen_lambda(idx: &EigenIndex) -> f64 {
    idx.lambda()
}

pub fn normal_derivative(idx: &EigenIndex, z: &Point) -> Result<f64> {
    idx.normal_derivative(z)
}

/// One expansion coefficient with its imaginary-part diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerm {
    pub index: EigenIndex,
    pub alpha: f64,
    pub imag_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    domain: BoxDomain,
    terms: Vec<SeriesTerm>,
}

impl SeriesCoefficients {
    pub fn new(domain: BoxDomain, terms: Vec<SeriesTerm>) -> Result<Self> {
        if terms.iter().any(|t| t.index.domain != domain) {
            return Err(Error::ShapeMismatch("coefficient belongs to a different box".into()));
        }
        if terms.iter().any(|t| !t.alpha.is_finite() || !t.imag_residual.is_finite()) {
            return Err(invalid("non-finite series coefficient"));
        }
        Ok(Self { domain, terms })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn terms(&self) -> &[SeriesTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(Σ α_m²)^{1/2}`.
    pub fn alpha_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.alpha * t.alpha).sum::<f64>().sqrt()
    }

    pub fn max_imag_residual(&self) -> f64 {
        self.terms.iter().map(|t| t.imag_residual.abs()).fold(0.0, f64::max)
    }

    pub fn get(&self, m: &[usize]) -> Option<&SeriesTerm> {
        self.terms.iter().find(|t| t.index.m() == m)
    }
}

fn check_data(s: &Sinogram) -> Result<BoxDomain> {
    let domain = BoxDomain::of(s.detectors())?;
    if s.radial().r_max() < domain.diameter() * (1.0 - 1e-12) {
        return Err(Error::RadialRangeTooShort {
            required: domain.diameter(),
            available: s.radial().r_max(),
        });
    }
    let last = s.radial().len() - 1;
    if s.rows().any(|row| row[last] != 0.0) {
        return Err(Error::RadialRangeTooShort {
            required: f64::INFINITY,
            available: s.radial().r_max(),
        });
    }
    Ok(domain)
}

/// `(α_m, imag_residual)` from the boundary data.
pub fn series_coefficient(s: &Sinogram, idx: &EigenIndex) -> Result<(f64, f64)> {
    let domain = check_data(s)?;
    if idx.domain != domain {
        return Err(Error::ShapeMismatch("eigen index belongs to a different box".into()));
    }
    let s = s.to_convention(MeasureConvention::Surface);
    coefficient_unchecked(&s, idx)
}

fn coefficient_unchecked(s: &Sinogram, idx: &EigenIndex) -> Result<(f64, f64)> {
    let order = KernelOrder::base(s.dim())?;
    let lambda = idx.lambda();
    let radial = s.radial();
    let nr = radial.len();
    let weights: Vec<(usize, f64, f64, f64)> = (1..nr)
        .map(|k| {
            let v = kernel_unchecked(order, lambda * radial.r(k));
            (k, trapezoid_weight(k, nr, radial.step()), v.j, v.y)
        })
        .collect();
    let det = s.detectors();
    let (mut re, mut im) = (0.0, 0.0);
    for (i, row) in s.rows().enumerate() {
        let du = idx.normal_derivative(&det.points()[i])?;
        let (mut mj, mut mn) = (0.0, 0.0);
        for &(k, w, j, y) in &weights {
            mj += w * j * row[k];
            mn += w * y * row[k];
        }
        re += det.weights()[i] * mn * du;
        im += det.weights()[i] * mj * du;
    }
    let c = green_constant(s.dim(), lambda)?;
    Ok((-c * re, c * im))
}

/// Coefficients for every index with `λ_m ≤ cutoff`.
pub fn series_coefficients(s: &Sinogram, cutoff: f64) -> Result<SeriesCoefficients> {
    let domain = check_data(s)?;
    let s = s.to_convention(MeasureConvention::Surface);
    let indices = domain.admissible(cutoff);
    let terms = crate::par::try_map_indexed(indices.len(), |k| {
        let index = indices[k];
        coefficient_unchecked(&s, &index).map(|(alpha, imag_residual)| SeriesTerm {
            index,
            alpha,
            imag_residual,
        })
    })?;
    SeriesCoefficients::new(domain, terms)
}

/// Exact coefficients `∫_Ω f u_m dx` by tensor Gauss–Legendre quadrature
/// over the box; an oracle for the boundary route.
pub fn volume_coefficients(
    p: &Phantom,
    domain: &BoxDomain,
    cutoff: f64,
    nodes_per_axis: usize,
) -> Result<SeriesCoefficients> {
    let rule = crate::quadrature::GaussRule::new(nodes_per_axis)?;
    let mut points = Vec::new();
    let axis = |k: usize| -> Vec<(f64, f64)> {
        if k < domain.dim {
            rule.mapped(0.0, domain.extents[k]).collect()
        } else {
            vec![(0.0, 1.0)]
        }
    };
    for &(x, wx) in &axis(0) {
        for &(y, wy) in &axis(1) {
            for &(z, wz) in &axis(2) {
                let pt = [x, y, z];
                points.push((pt, wx * wy * wz * p.eval(&pt)));
            }
        }
    }
    let indices = domain.admissible(cutoff);
    let terms = crate::par::map_indexed(indices.len(), |k| SeriesTerm {
        index: indices[k],
        alpha: points.iter().map(|(x, w)| w * indices[k].eval(x)).sum(),
        imag_residual: 0.0,
    });
    SeriesCoefficients::new(*domain, terms)
}

/// `Σ_m α_m u_m(x)` on the grid.
pub fn series_reconstruct(coeffs: &SeriesCoefficients, grid: &ImageGrid) -> Result<ImageGrid> {
    check_grid(coeffs.domain(), grid)?;
    let points: Vec<Point> = grid.points().collect();
    let values = crate::par::map_indexed(points.len(), |p| {
        coeffs
            .terms()
            .iter()
            .map(|t| t.alpha * t.index.eval(&points[p]))
            .sum()
    });
    grid.zeroed().with_values(values)
}

fn check_grid(domain: &BoxDomain, grid: &ImageGrid) -> Result<()> {
    if grid.dim() != domain.dim() {
        return Err(Error::ShapeMismatch(format!(
            "grid in dimension {} for a {}-D box",
            grid.dim(),
            domain.dim()
        )));
    }
    let inside = (0..grid.len()).all(|i| domain.contains(&grid.point(i)));
    if !inside {
        return Err(invalid("reconstruction grid leaves the box"));
    }
    Ok(())
}

/// Backprojection form: `f(x) = Σ_i w_i h(z_i, |x − z_i|)` with
/// `h(z, t) = −Σ_m c(λ_m, n) α_m N(λ_m t) ∂_n u_m(z)` tabulated in `t`.
pub fn series_backprojection(
    s: &Sinogram,
    coeffs: &SeriesCoefficients,
    grid: &ImageGrid,
) -> Result<ImageGrid> {
    let domain = *coeffs.domain();
    if BoxDomain::of(s.detectors())? != domain {
        return Err(Error::ShapeMismatch("sinogram and coefficients use different boxes".into()));
    }
    check_grid(&domain, grid)?;
    let det = s.detectors();
    let points: Vec<Point> = grid.points().collect();
    let (mut t_lo, mut t_hi) = (f64::INFINITY, 0.0f64);
    for z in det.points() {
        for y in &points {
            let t = distance(y, z);
            t_lo = t_lo.min(t);
            t_hi = t_hi.max(t);
        }
    }
    if !(t_lo > 0.0) {
        return Err(invalid("a grid point coincides with a detector"));
    }
    let lambda_max = coeffs.terms().iter().map(|t| t.index.lambda()).fold(1.0, f64::max);
    // linear interpolation error (λ Δt)²/8 stays below 1e-4
    let dt = (0.025 / lambda_max).min(grid.spacing() / 4.0);
    let len = ((t_hi - t_lo) / dt).ceil() as usize + 2;
    let order = KernelOrder::base(domain.dim())?;
    let terms = coeffs.terms();
    // n_tab[m][k] = c(λ_m) α_m N(λ_m t_k)
    let n_tab: Vec<Vec<f64>> = crate::par::try_map_indexed(terms.len(), |m| -> Result<Vec<f64>> {
        let lam = terms[m].index.lambda();
        let ca = green_constant(domain.dim(), lam)? * terms[m].alpha;
        Ok((0..len)
            .map(|k| ca * kernel_unchecked(order, lam * (t_lo + k as f64 * dt)).y)
            .collect())
    })?;
    let h: Vec<Vec<f64>> = crate::par::try_map_indexed(det.len(), |i| -> Result<Vec<f64>> {
        let z = &det.points()[i];
        let mut row = vec![0.0; len];
        for (m, term) in terms.iter().enumerate() {
            let du = term.index.normal_derivative(z)?;
            for (r, n) in row.iter_mut().zip(&n_tab[m]) {
                *r -= n * du;
            }
        }
        Ok(row)
    })?;
    let values = crate::par::map_indexed(points.len(), |p| {
        let y = &points[p];
        (0..det.len())
            .map(|i| {
                let x = (distance(y, &det.points()[i]) - t_lo) / dt;
                let k = (x.floor() as usize).min(len - 2);
                let f = x - k as f64;
                det.weights()[i] * (h[i][k] + f * (h[i][k + 1] - h[i][k]))
            })
            .sum()
    });
    grid.zeroed().with_values(values)
}

/// `(u_m(x) − Re ∮ i c H ∂_n u_m ds, Im ∮ i c H ∂_n u_m ds)`: the boundary
/// representation of an eigenfunction and its vanishing `J` part.
pub fn helmholtz_representation_defect(
    idx: &EigenIndex,
    x: &Point,
    detectors: &DetectorSet,
) -> Result<(f64, f64)> {
    let order = KernelOrder::base(idx.domain.dim)?;
    let lam = idx.lambda();
    let c = green_constant(idx.domain.dim, lam)?;
    let (mut re, mut im) = (0.0, 0.0);
    for ((z, _), w) in detectors.points().iter().zip(detectors.normals()).zip(detectors.weights()) {
        let du = idx.normal_derivative(z)?;
        let v = kernel_unchecked(order, lam * distance(x, z));
        re += w * v.y * du;
        im += w * v.j * du;
    }
    Ok((idx.eval(x) + c * re, c * im))
}

/// Radial grid reaching past every sphere centred on a detector that meets
/// the support of `f` (and at least the box diameter), with the last sample
/// beyond the support so the last column is zero.
pub fn covering_radial_grid(
    f: &Phantom,
    detectors: &DetectorSet,
    domain: &BoxDomain,
    nr: usize,
) -> Result<RadialGrid> {
    let reach = detectors
        .points()
        .iter()
        .flat_map(|z| {
            f.components().iter().map(move |c| {
                let (center, r) = c.bounding_ball(f.dim());
                distance(z, &center) + r
            })
        })
        .fold(domain.diameter(), f64::max);
    RadialGrid::new(reach * (1.0 + 2.0 / nr as f64), nr)
}

/// Reconstruction of `F · 1_Ω` from spheres centred on `∂Ω` when `F` may
/// extend beyond the box.
pub fn interior_support_test(
    f: &Phantom,
    domain: &BoxDomain,
    per_face: usize,
    nr: usize,
    grid: &ImageGrid,
    cutoff: f64,
) -> Result<ImageGrid> {
    let det = box_detectors(domain.dim(), domain.extents(), per_face)?;
    let radial = covering_radial_grid(f, &det, domain, nr)?;
    let s = forward_quadrature(f, &det, radial, crate::forward::DEFAULT_NODES)
        .map_err(|e| e.in_stage("forward"))?;
    let coeffs = series_coefficients(&s, cutoff).map_err(|e| e.in_stage("coefficients"))?;
    series_reconstruct(&coeffs, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_indices_are_sorted_and_bounded() {
        let d = BoxDomain::new(2, [2.0, 1.0, 0.0]).unwrap();
        let idx = d.admissible(10.0);
        assert!(idx.windows(2).all(|w| w[0].lambda() <= w[1].lambda()));
        assert!(idx.iter().all(|i| i.lambda() <= 10.0));
        let brute = (1..10)
            .flat_map(|a| (1..10).map(move |b| (a, b)))
            .filter(|&(a, b)| PI * ((a as f64 / 2.0).powi(2) + (b as f64).powi(2)).sqrt() <= 10.0)
            .count();
        assert_eq!(idx.len(), brute);
    }

    #[test]
    fn corners_and_interior_points_are_rejected() {
        let d = BoxDomain::unit(2).unwrap();
        let idx = EigenIndex::new(&d, &[1, 2]).unwrap();
        assert!(matches!(idx.normal_derivative(&[0.0, 0.0, 0.0]), Err(Error::CornerPoint(_))));
        assert!(matches!(idx.normal_derivative(&[0.5, 0.5, 0.0]), Err(Error::OffBoundary(_))));
        assert!(matches!(idx.normal_derivative(&[1.5, 0.5, 0.0]), Err(Error::OffBoundary(_))));
    }
}
