//! Filtration + divergence-form backprojection for detectors on a sphere.
//!
//! The filter turns each projection row `g(z, ·)` into
//! `h(z, t) = ∫ [N(λt) M_J(λ) − J(λt) M_N(λ)] λ^{2n−3} dλ` with the radial
//! moments `M_J(λ) = ∫ J(λr) g(z, r) dr` (same for `N`), and the image is
//! `f(y) = C_n div_y Σ_i w_i n(z_i) h(z_i, |y − z_i|)`,
//! `C_n = 1/(4 (2π)^{n−1})`, times a calibration constant.
//!
//! In 3-D the spectral integral collapses to `h = −(2/t) d/dt (g/t)`.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::forward::{MeasureConvention, RadialGrid, Sinogram};
use crate::geometry::{dot, sub, DetectorSet, ImageGrid, Layout, Point};
use crate::quadrature::trapezoid_weight;
use crate::specfun::{kernel_j, kernel_unchecked, kernel_with_derivative_unchecked, KernelOrder};

/// Measured ratio between the true image and the uncalibrated output of
/// [`reconstruct`] for data in the surface convention. It is the same in
/// 2-D and 3-D; its sign reflects the orientation of the boundary term in
/// the Helmholtz representation the constant `C_n` was derived from.
pub const DEFAULT_CALIBRATION: f64 = -1.0;

/// `1/(4 (2π)^{n−1})`.
pub fn backprojection_constant(dim: usize) -> f64 {
    1.0 / (4.0 * (2.0 * PI).powi(dim as i32 - 1))
}

/// Trapezoid nodes `λ_j = j Δλ`, `j = 1..=len`, on `(0, λ_max]`. The `λ = 0`
/// node is dropped: the filter integrand vanishes there for every `n ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    lambda_max: f64,
    len: usize,
}

impl SpectralGrid {
    pub const MIN_LEN: usize = 16;

    pub fn new(lambda_max: f64, len: usize) -> Result<Self> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(invalid(format!("lambda_max must be positive, got {lambda_max}")));
        }
        if len < Self::MIN_LEN {
            return Err(invalid(format!(
                "spectral grid needs at least {} nodes, got {len}",
                Self::MIN_LEN
            )));
        }
        Ok(Self { lambda_max, len })
    }

    /// Grid for data on `radial`; defaults are `λ_max = π/Δr`, `len = 4 Nr`.
    pub fn for_radial(
        radial: &RadialGrid,
        lambda_max: Option<f64>,
        len: Option<usize>,
    ) -> Result<Self> {
        let nyquist = PI / radial.step();
        let grid = Self::new(
            lambda_max.unwrap_or(nyquist),
            len.unwrap_or(4 * radial.len()),
        )?;
        if grid.lambda_max > nyquist * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "lambda_max {} exceeds the radial Nyquist limit π/Δr = {nyquist}",
                grid.lambda_max
            )));
        }
        Ok(grid)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.lambda_max / self.len as f64
    }

    pub fn lambda(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.step()
    }

    pub fn weight(&self, j: usize) -> f64 {
        if j + 1 == self.len {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len).map(|j| (self.lambda(j), self.weight(j)))
    }
}

/// Evaluation radii for the filtered data: the radial samples with indices
/// in `range`.
#[derive(Debug, Clone, PartialEq)]
pub struct TGrid {
    radial: RadialGrid,
    range: Range<usize>,
}

impl TGrid {
    pub fn new(radial: RadialGrid, range: Range<usize>) -> Result<Self> {
        if range.start < 1 || range.end > radial.len() || range.len() < 2 {
            return Err(invalid(format!(
                "t-grid indices {range:?} must lie in 1..{} and hold at least 2 samples",
                radial.len()
            )));
        }
        Ok(Self { radial, range })
    }

    /// Smallest sub-grid of `radial` covering `[t_min, t_max]`.
    pub fn covering(radial: RadialGrid, t_min: f64, t_max: f64) -> Result<Self> {
        let dr = radial.step();
        let lo = (t_min / dr).floor().max(0.0) as usize;
        let hi = (t_max / dr).ceil() as usize + 1;
        if t_min <= 0.0 || lo < 1 {
            return Err(invalid(format!("t-range [{t_min}, {t_max}] reaches t = 0")));
        }
        if hi > radial.len() {
            return Err(Error::RadialRangeTooShort {
                required: t_max,
                available: radial.r_max(),
            });
        }
        Self::new(radial, lo..hi)
    }

    pub fn radial(&self) -> &RadialGrid {
        &self.radial
    }

    pub fn indices(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn t(&self, m: usize) -> f64 {
        self.radial.r(self.range.start + m)
    }

    pub fn t_min(&self) -> f64 {
        self.t(0)
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.len() - 1)
    }
}

fn check_row(row: &[f64], radial: &RadialGrid) -> Result<()> {
    if row.len() != radial.len() {
        return Err(Error::ShapeMismatch(format!(
            "row of {} samples on a radial grid of {}",
            row.len(),
            radial.len()
        )));
    }
    Ok(())
}

/// `∫ J(λr) g(r) dr` by the trapezoid rule on `radial`.
pub fn moment_j(row: &[f64], radial: &RadialGrid, dim: usize, lambda: f64) -> Result<f64> {
    check_row(row, radial)?;
    let order = KernelOrder::base(dim)?;
    let n = radial.len();
    row.iter()
        .enumerate()
        .filter(|(_, g)| **g != 0.0)
        .map(|(k, g)| Ok(trapezoid_weight(k, n, radial.step()) * g * kernel_j(order, lambda * radial.r(k))?))
        .sum()
}

/// `∫ N(λr) g(r) dr` by the trapezoid rule; the `r = 0` sample is skipped
/// (`g` vanishes there for projection data).
pub fn moment_n(row: &[f64], radial: &RadialGrid, dim: usize, lambda: f64) -> Result<f64> {
    check_row(row, radial)?;
    if !(lambda > 0.0) {
        return Err(invalid(format!("N moment needs lambda > 0, got {lambda}")));
    }
    let order = KernelOrder::base(dim)?;
    let n = radial.len();
    Ok(row
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, g)| **g != 0.0)
        .map(|(k, g)| trapezoid_weight(k, n, radial.step()) * g * kernel_unchecked(order, lambda * radial.r(k)).y)
        .sum())
}

/// `lim_{λ→0} [N_0(λt) M_J(λ) − J_0(λt) M_N(λ)] = (2/π)[ln t ∫g − ∫ ln r g(r) dr]`
/// for 2-D data; the `ln λ` terms of the two products cancel.
pub fn bracket_limit_2d(row: &[f64], radial: &RadialGrid, t: f64) -> Result<f64> {
    check_row(row, radial)?;
    if !(t > 0.0) {
        return Err(invalid(format!("bracket limit needs t > 0, got {t}")));
    }
    let (mass, log_mass) = log_moments(row, radial);
    Ok(2.0 / PI * (t.ln() * mass - log_mass))
}

/// `(∫ g dr, ∫ ln r g dr)`, skipping `r = 0`.
fn log_moments(row: &[f64], radial: &RadialGrid) -> (f64, f64) {
    let n = radial.len();
    row.iter()
        .enumerate()
        .skip(1)
        .fold((0.0, 0.0), |(m, l), (k, g)| {
            let w = trapezoid_weight(k, n, radial.step()) * g;
            (m + w, l + w * radial.r(k).ln())
        })
}

/// Filtered row `h(z, t_m)` and its derivative `∂h/∂t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredRow {
    pub h: Vec<f64>,
    pub ht: Vec<f64>,
}

/// Kernel tables shared by all rows of one sinogram.
///
/// `j_tab[k][l]`, `n_tab[k][l]` hold the kernels at `λ_l r_k` (λ fastest);
/// `dj_tab`, `dn_tab` the derivatives at `λ_l t_m`.
#[derive(Debug, Clone)]
pub struct SpectralFilter {
    dim: usize,
    spectral: SpectralGrid,
    t_grid: TGrid,
    r_weights: Vec<f64>,
    j_tab: Vec<f64>,
    n_tab: Vec<f64>,
    dj_tab: Vec<f64>,
    dn_tab: Vec<f64>,
}

impl SpectralFilter {
    pub fn new(dim: usize, t_grid: TGrid, spectral: SpectralGrid) -> Result<Self> {
        let order = KernelOrder::base(dim)?;
        let radial = *t_grid.radial();
        let nl = spectral.len();
        let nr = radial.len();
        let r_weights: Vec<f64> = (0..nr).map(|k| trapezoid_weight(k, nr, radial.step())).collect();
        let rows = crate::par::map_indexed(nr, |k| {
            let r = radial.r(k);
            let mut j = vec![0.0; nl];
            let mut n = vec![0.0; nl];
            let mut dj = Vec::new();
            let mut dn = Vec::new();
            let in_t = t_grid.indices().contains(&k);
            if in_t {
                dj.resize(nl, 0.0);
                dn.resize(nl, 0.0);
            }
            for l in 0..nl {
                let s = spectral.lambda(l) * r;
                if k == 0 {
                    // N(0) is singular; its r = 0 moment weight is dropped
                    j[l] = kernel_j(order, 0.0).unwrap_or(0.0);
                } else if in_t {
                    let (v, d) = kernel_with_derivative_unchecked(order, s);
                    (j[l], n[l], dj[l], dn[l]) = (v.j, v.y, d.j, d.y);
                } else {
                    let v = kernel_unchecked(order, s);
                    (j[l], n[l]) = (v.j, v.y);
                }
            }
            (j, n, dj, dn)
        });
        let mut out = Self {
            dim,
            spectral,
            t_grid,
            r_weights,
            j_tab: Vec::with_capacity(nr * nl),
            n_tab: Vec::with_capacity(nr * nl),
            dj_tab: Vec::new(),
            dn_tab: Vec::new(),
        };
        for (j, n, dj, dn) in rows {
            out.j_tab.extend(j);
            out.n_tab.extend(n);
            out.dj_tab.extend(dj);
            out.dn_tab.extend(dn);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_grid(&self) -> &TGrid {
        &self.t_grid
    }

    pub fn spectral(&self) -> &SpectralGrid {
        &self.spectral
    }

    /// `(M_J(λ_l), M_N(λ_l))` for all spectral nodes.
    pub fn moments(&self, row: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_row(row, self.t_grid.radial())?;
        let nl = self.spectral.len();
        let mut mj = vec![0.0; nl];
        let mut mn = vec![0.0; nl];
        for (k, &g) in row.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let w = self.r_weights[k] * g;
            let (jr, nr) = (&self.j_tab[k * nl..][..nl], &self.n_tab[k * nl..][..nl]);
            for l in 0..nl {
                mj[l] += w * jr[l];
                mn[l] += w * nr[l];
            }
        }
        Ok((mj, mn))
    }

    pub fn apply(&self, row: &[f64]) -> Result<FilteredRow> {
        let (mj, mn) = self.moments(row)?;
        let nl = self.spectral.len();
        let p = 2 * self.dim as i32 - 3;
        // spectral weights folded into the moments
        let (mut aj, mut an, mut bj, mut bn) = (mj.clone(), mn.clone(), mj, mn);
        for l in 0..nl {
            let lam = self.spectral.lambda(l);
            let w = self.spectral.weight(l) * lam.powi(p);
            aj[l] *= w;
            an[l] *= w;
            bj[l] *= w * lam;
            bn[l] *= w * lam;
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let start = self.t_grid.indices().start;
        let mut h = Vec::with_capacity(self.t_grid.len());
        let mut ht = Vec::with_capacity(self.t_grid.len());
        for (m, k) in self.t_grid.indices().enumerate() {
            let (jr, nr) = (&self.j_tab[k * nl..][..nl], &self.n_tab[k * nl..][..nl]);
            h.push(dot(nr, &aj) - dot(jr, &an));
            debug_assert_eq!(m, k - start);
            let (djr, dnr) = (&self.dj_tab[m * nl..][..nl], &self.dn_tab[m * nl..][..nl]);
            ht.push(dot(dnr, &bj) - dot(djr, &bn));
        }
        if let Some((mass, log_mass)) = self.origin_moments(row) {
            let c = self.origin_weight();
            for (m, (h, ht)) in h.iter_mut().zip(&mut ht).enumerate() {
                let t = self.t_grid.t(m);
                *h += c * (t.ln() * mass - log_mass);
                *ht += c * mass / t;
            }
        }
        Ok(FilteredRow { h, ht })
    }

    /// In 2-D the integrand is `λ B(λ)` with `B(0)` the finite bracket limit,
    /// so its slope at `λ = 0` is nonzero and the trapezoid rule needs the
    /// Euler–Maclaurin end term `(Δλ²/12) B(0)`. For `n ≥ 3` the slope
    /// vanishes.
    fn origin_moments(&self, row: &[f64]) -> Option<(f64, f64)> {
        (self.dim == 2).then(|| log_moments(row, self.t_grid.radial()))
    }

    fn origin_weight(&self) -> f64 {
        self.spectral.step().powi(2) / 12.0 * 2.0 / PI
    }

    /// Same filter evaluated through the Hankel function `H = J + iN`:
    /// `h = Re(−(i/2) ∫ [H(λt) conj(M_H) − conj(H(λt)) M_H] λ^{2n−3} dλ)`.
    pub fn apply_hankel(&self, row: &[f64]) -> Result<Vec<f64>> {
        let (mj, mn) = self.moments(row)?;
        let nl = self.spectral.len();
        let p = 2 * self.dim as i32 - 3;
        let half_i = Complex64::new(0.0, -0.5);
        let origin = self.origin_moments(row);
        Ok(self
            .t_grid
            .indices()
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..nl {
                    let lam = self.spectral.lambda(l);
                    let hk = Complex64::new(self.j_tab[k * nl + l], self.n_tab[k * nl + l]);
                    let mh = Complex64::new(mj[l], mn[l]);
                    let w = self.spectral.weight(l) * lam.powi(p);
                    acc += (hk * mh.conj() - hk.conj() * mh) * w;
                }
                let end = origin.map_or(0.0, |(mass, log_mass)| {
                    self.origin_weight() * (self.t_grid.radial().r(k).ln() * mass - log_mass)
                });
                (half_i * acc).re + end
            })
            .collect())
    }
}

/// General `n`-D filter of one row.
pub fn filter_nd(
    row: &[f64],
    t_grid: &TGrid,
    spectral: SpectralGrid,
    dim: usize,
) -> Result<FilteredRow> {
    SpectralFilter::new(dim, t_grid.clone(), spectral)?.apply(row)
}

/// 2-D filter; the `n = 2` case of [`filter_nd`].
pub fn filter_2d(row: &[f64], t_grid: &TGrid, spectral: SpectralGrid) -> Result<FilteredRow> {
    filter_nd(row, t_grid, spectral, 2)
}

/// 3-D filter `h = −(2/t) φ'`, `φ = g/t`, with `∂h/∂t = (2/t²) φ' − (2/t) φ''`.
/// Central differences inside the radial grid, one-sided second-order
/// stencils at its ends.
pub fn filter_3d(row: &[f64], t_grid: &TGrid) -> Result<FilteredRow> {
    let radial = t_grid.radial();
    check_row(row, radial)?;
    if t_grid.indices().start < 2 {
        return Err(invalid("3-D filter needs the t-grid to start at radial index 2 or later"));
    }
    let dr = radial.step();
    let nr = radial.len();
    let phi = |k: usize| row[k] / radial.r(k);
    let mut h = Vec::with_capacity(t_grid.len());
    let mut ht = Vec::with_capacity(t_grid.len());
    for k in t_grid.indices() {
        let (d1, d2) = if k + 1 < nr {
            let (a, b, c) = (phi(k - 1), phi(k), phi(k + 1));
            ((c - a) / (2.0 * dr), (c - 2.0 * b + a) / (dr * dr))
        } else {
            let (a, b, c, d) = (phi(k), phi(k - 1), phi(k - 2), phi(k - 3));
            (
                (3.0 * a - 4.0 * b + c) / (2.0 * dr),
                (2.0 * a - 5.0 * b + 4.0 * c - d) / (dr * dr),
            )
        };
        let t = radial.r(k);
        h.push(-2.0 / t * d1);
        ht.push(2.0 / (t * t) * d1 - 2.0 / t * d2);
    }
    Ok(FilteredRow { h, ht })
}

/// Filtered data `h(z_i, t)`, `∂h/∂t` on a common t-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTable {
    detectors: DetectorSet,
    t_grid: TGrid,
    h: Vec<f64>,
    ht: Vec<f64>,
}

impl FilterTable {
    pub fn new(detectors: DetectorSet, t_grid: TGrid, rows: Vec<FilteredRow>) -> Result<Self> {
        if rows.len() != detectors.len() || rows.iter().any(|r| r.h.len() != t_grid.len() || r.ht.len() != t_grid.len()) {
            return Err(Error::ShapeMismatch(format!(
                "filter table needs {} rows of {} samples",
                detectors.len(),
                t_grid.len()
            )));
        }
        let mut h = Vec::with_capacity(detectors.len() * t_grid.len());
        let mut ht = Vec::with_capacity(h.capacity());
        for r in rows {
            h.extend(r.h);
            ht.extend(r.ht);
        }
        if h.iter().chain(&ht).any(|v| !v.is_finite()) {
            return Err(invalid("filter table contains non-finite values"));
        }
        Ok(Self {
            detectors,
            t_grid,
            h,
            ht,
        })
    }

    pub fn detectors(&self) -> &DetectorSet {
        &self.detectors
    }

    pub fn t_grid(&self) -> &TGrid {
        &self.t_grid
    }

    pub fn h_row(&self, i: usize) -> &[f64] {
        &self.h[i * self.t_grid.len()..][..self.t_grid.len()]
    }

    pub fn ht_row(&self, i: usize) -> &[f64] {
        &self.ht[i * self.t_grid.len()..][..self.t_grid.len()]
    }

    /// Linear interpolation of `(h, ∂h/∂t)` for detector `i`.
    pub fn interpolate(&self, i: usize, t: f64) -> Result<(f64, f64)> {
        let (lo, hi) = (self.t_grid.t_min(), self.t_grid.t_max());
        let dt = self.t_grid.radial().step();
        let x = (t - lo) / dt;
        let last = self.t_grid.len() - 1;
        if !(x >= -1e-9 && x <= last as f64 + 1e-9) {
            return Err(Error::OutsideFilterRange { t, min: lo, max: hi });
        }
        let m = (x.floor().max(0.0) as usize).min(last - 1);
        let f = (x - m as f64).clamp(0.0, 1.0);
        let (h, ht) = (self.h_row(i), self.ht_row(i));
        Ok((
            h[m] + f * (h[m + 1] - h[m]),
            ht[m] + f * (ht[m + 1] - ht[m]),
        ))
    }
}

/// How the divergence is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backprojection {
    /// `div [n h(|y − z|)] = ∂h/∂t · n·(y − z)/|y − z|` using the `ht` table.
    AnalyticGradient,
    /// Central differences of `V(y) = Σ w_i n_i h_i(|y − z_i|)` with step
    /// equal to the grid spacing.
    GridDivergence,
}

/// `C_n div Σ_i w_i n(z_i) h(z_i, |y − z_i|)` on every grid point.
pub fn backproject_div(ft: &FilterTable, grid: &ImageGrid, mode: Backprojection) -> Result<ImageGrid> {
    let det = ft.detectors();
    let dim = det.dim();
    if grid.dim() != dim {
        return Err(Error::ShapeMismatch(format!(
            "grid in dimension {} but detectors in {dim}",
            grid.dim()
        )));
    }
    let cn = backprojection_constant(dim);
    let points: Vec<Point> = grid.points().collect();
    let step = grid.spacing();
    let field = |y: &Point, axis: usize| -> Result<f64> {
        let mut v = 0.0;
        for i in 0..det.len() {
            let t = crate::geometry::distance(y, &det.points()[i]);
            v += det.weights()[i] * det.normals()[i][axis] * ft.interpolate(i, t)?.0;
        }
        Ok(v)
    };
    let values = crate::par::try_map_indexed(points.len(), |p| -> Result<f64> {
        let y = &points[p];
        match mode {
            Backprojection::AnalyticGradient => {
                let mut acc = 0.0;
                for i in 0..det.len() {
                    let d = sub(y, &det.points()[i]);
                    let t = dot(&d, &d).sqrt();
                    let (_, ht) = ft.interpolate(i, t)?;
                    acc += det.weights()[i] * dot(&det.normals()[i], &d) / t * ht;
                }
                Ok(cn * acc)
            }
            Backprojection::GridDivergence => {
                let mut div = 0.0;
                for axis in 0..dim {
                    let (mut plus, mut minus) = (*y, *y);
                    plus[axis] += step;
                    minus[axis] -= step;
                    div += (field(&plus, axis)? - field(&minus, axis)?) / (2.0 * step);
                }
                Ok(cn * div)
            }
        }
    })?;
    grid.zeroed().with_values(values)
}

/// Which filter [`reconstruct`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// `Fbp2d` in 2-D, `Fbp3d` in 3-D.
    Auto,
    Fbp2d,
    Fbp3d,
    FbpNd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    pub method: Method,
    /// `λ_max` and node count; `None` picks the defaults of
    /// [`SpectralGrid::for_radial`].
    pub lambda_max: Option<f64>,
    pub n_lambda: Option<usize>,
    pub backprojection: Backprojection,
    pub calibration: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            lambda_max: None,
            n_lambda: None,
            backprojection: Backprojection::AnalyticGradient,
            calibration: DEFAULT_CALIBRATION,
        }
    }
}

/// t-grid covering every `|y − z|` for grid points `y` and detectors on the
/// sphere of radius `R`, with a margin of `extra` beyond two radial steps.
pub fn t_grid_for(radial: RadialGrid, radius: f64, grid: &ImageGrid, extra: f64) -> Result<TGrid> {
    let reach = grid.max_distance_from(&[0.0; 3]);
    if reach >= radius {
        return Err(invalid(format!(
            "reconstruction grid reaches radius {reach}, outside the detector sphere of radius {radius}"
        )));
    }
    let margin = 2.0 * radial.step() + extra;
    TGrid::covering(radial, radius - reach - margin, radius + reach + margin)
}

/// Filters every row of `s`.
pub fn filter_sinogram(s: &Sinogram, t_grid: &TGrid, method: Method, spectral: Option<SpectralGrid>) -> Result<FilterTable> {
    let dim = s.dim();
    let method = resolve(method, dim)?;
    let rows = if method == Method::Fbp3d {
        crate::par::try_map_indexed(s.detectors().len(), |i| filter_3d(s.row(i), t_grid))?
    } else {
        let spectral = match spectral {
            Some(sg) => sg,
            None => SpectralGrid::for_radial(s.radial(), None, None)?,
        };
        let filter = SpectralFilter::new(dim, t_grid.clone(), spectral)?;
        crate::par::try_map_indexed(s.detectors().len(), |i| filter.apply(s.row(i)))?
    };
    FilterTable::new(s.detectors().clone(), t_grid.clone(), rows)
}

fn resolve(method: Method, dim: usize) -> Result<Method> {
    match (method, dim) {
        (Method::Auto, 2) | (Method::Fbp2d, 2) => Ok(Method::Fbp2d),
        (Method::Auto, 3) | (Method::Fbp3d, 3) => Ok(Method::Fbp3d),
        (Method::FbpNd, _) => Ok(Method::FbpNd),
        (m, d) => Err(Error::Unsupported(format!("method {m:?} for {d}-D data"))),
    }
}

/// Full closed-form pipeline: filtration, backprojection, calibration.
pub fn reconstruct(s: &Sinogram, grid: &ImageGrid, opts: &ReconstructOptions) -> Result<ImageGrid> {
    let Layout::Sphere { radius, .. } = *s.detectors().layout() else {
        return Err(Error::Unsupported("closed-form inversion needs sphere detectors".into()));
    };
    let s = s.to_convention(MeasureConvention::Surface);
    let extra = match opts.backprojection {
        Backprojection::AnalyticGradient => 0.0,
        Backprojection::GridDivergence => grid.spacing(),
    };
    let t_grid = t_grid_for(*s.radial(), radius, grid, extra).map_err(|e| e.in_stage("t-grid"))?;
    let spectral = match resolve(opts.method, s.dim())? {
        Method::Fbp3d => None,
        _ => Some(
            SpectralGrid::for_radial(s.radial(), opts.lambda_max, opts.n_lambda)
                .map_err(|e| e.in_stage("spectral grid"))?,
        ),
    };
    let table = filter_sinogram(&s, &t_grid, opts.method, spectral).map_err(|e| e.in_stage("filtration"))?;
    let mut image = backproject_div(&table, grid, opts.backprojection).map_err(|e| e.in_stage("backprojection"))?;
    image.values_mut().iter_mut().for_each(|v| *v *= opts.calibration);
    Ok(image)
}

/// Least-squares `α` minimising `‖α recon − truth‖²`.
pub fn calibrate_values(truth: &[f64], recon: &[f64]) -> Result<f64> {
    if truth.len() != recon.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} truth samples vs {} reconstructed",
            truth.len(),
            recon.len()
        )));
    }
    let rr: f64 = recon.iter().map(|r| r * r).sum();
    let tt: f64 = truth.iter().map(|t| t * t).sum();
    if !(rr > 1e-24 * tt.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate("reconstruction is numerically zero".into()));
    }
    Ok(recon.iter().zip(truth).map(|(r, t)| r * t).sum::<f64>() / rr)
}

/// [`calibrate_values`] against a phantom sampled on the reconstruction grid.
pub fn calibrate(phantom: &crate::geometry::Phantom, recon: &ImageGrid) -> Result<f64> {
    let truth: Vec<f64> = recon.points().map(|p| phantom.eval(&p)).collect();
    if truth.iter().all(|&t| t == 0.0) {
        return Err(Error::Degenerate("phantom vanishes on the grid".into()));
    }
    calibrate_values(&truth, recon.values())
}
