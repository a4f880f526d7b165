//! Phantoms, reconstruction grids and detector layouts.
//!
//! Points are stored as `[f64; 3]` for every dimension; in 2-D the third
//! coordinate is zero and ignored.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussRule;

pub type Point = [f64; 3];

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("geometry in dimension {dim} (only 2 and 3)")))
    }
}

/// Surface measure of the unit sphere `S^{n−1}`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / crate::specfun::gamma_plus_one(n / 2.0 - 1.0)
}

/// One additive piece of a phantom.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// `A · 1{|x − c| < ρ}`; discontinuous, kept for its closed-form
    /// projections.
    Ball {
        center: Point,
        radius: f64,
        amplitude: f64,
    },
    /// `A (1 − |x − c|²/ρ²)²` inside the ball, zero outside; C¹.
    Bump {
        center: Point,
        radius: f64,
        amplitude: f64,
    },
    /// `A u_m(x)` on the box `[0, L]^n`, zero outside: a Dirichlet
    /// eigenfunction of the box.
    BoxMode {
        extents: Point,
        mode: [usize; 3],
        amplitude: f64,
    },
}

impl Component {
    pub fn ball(center: Point, radius: f64, amplitude: f64) -> Self {
        Component::Ball {
            center,
            radius,
            amplitude,
        }
    }

    pub fn bump(center: Point, radius: f64, amplitude: f64) -> Self {
        Component::Bump {
            center,
            radius,
            amplitude,
        }
    }

    pub fn box_mode(extents: Point, mode: [usize; 3], amplitude: f64) -> Self {
        Component::BoxMode {
            extents,
            mode,
            amplitude,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let amplitude = match *self {
            Component::Ball {
                radius, amplitude, ..
            }
            | Component::Bump {
                radius, amplitude, ..
            } => {
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(invalid(format!("component radius must be positive, got {radius}")));
                }
                amplitude
            }
            Component::BoxMode {
                extents,
                mode,
                amplitude,
            } => {
                if extents[..dim].iter().any(|&l| !(l > 0.0)) || mode[..dim].contains(&0) {
                    return Err(invalid("box mode needs positive extents and indices"));
                }
                amplitude
            }
        };
        if !amplitude.is_finite() {
            return Err(invalid("component amplitude must be finite"));
        }
        Ok(())
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Component::Ball { amplitude, .. }
            | Component::Bump { amplitude, .. }
            | Component::BoxMode { amplitude, .. } => amplitude,
        }
    }

    /// Centre and radius of a ball containing the support.
    pub fn bounding_ball(&self, dim: usize) -> (Point, f64) {
        match *self {
            Component::Ball { center, radius, .. } | Component::Bump { center, radius, .. } => {
                (center, radius)
            }
            Component::BoxMode { extents, .. } => {
                let mut c = [0.0; 3];
                let mut r2 = 0.0;
                for k in 0..dim {
                    c[k] = 0.5 * extents[k];
                    r2 += c[k] * c[k];
                }
                (c, r2.sqrt())
            }
        }
    }

    pub fn eval(&self, dim: usize, x: &Point) -> f64 {
        match *self {
            Component::Ball {
                center,
                radius,
                amplitude,
            } => {
                if distance(x, &center) < radius {
                    amplitude
                } else {
                    0.0
                }
            }
            Component::Bump {
                center,
                radius,
                amplitude,
            } => {
                let s = 1.0 - dot(&sub(x, &center), &sub(x, &center)) / (radius * radius);
                if s > 0.0 {
                    amplitude * s * s
                } else {
                    0.0
                }
            }
            Component::BoxMode {
                extents,
                mode,
                amplitude,
            } => {
                let mut v = amplitude;
                for k in 0..dim {
                    let l = extents[k];
                    if !(0.0..=l).contains(&x[k]) {
                        return 0.0;
                    }
                    v *= (2.0 / l).sqrt() * (mode[k] as f64 * PI * x[k] / l).sin();
                }
                v
            }
        }
    }

    /// `∫ f dx` in closed form.
    pub fn integral(&self, dim: usize) -> f64 {
        let a = self.amplitude();
        match *self {
            Component::Ball { radius, .. } => {
                a * unit_sphere_area(dim) * radius.powi(dim as i32) / dim as f64
            }
            Component::Bump { radius, .. } => {
                // |S^{n−1}| ρ^n ∫_0^1 (1 − s²)² s^{n−1} ds
                let n = dim as f64;
                let radial = 1.0 / n - 2.0 / (n + 2.0) + 1.0 / (n + 4.0);
                a * unit_sphere_area(dim) * radius.powi(dim as i32) * radial
            }
            Component::BoxMode { extents, mode, .. } => (0..dim)
                .map(|k| {
                    let (l, m) = (extents[k], mode[k] as f64);
                    let parity = if mode[k] % 2 == 1 { 2.0 } else { 0.0 };
                    (2.0 / l).sqrt() * l / (m * PI) * parity
                })
                .product::<f64>()
                * a,
        }
    }
}

/// The unknown function `f`: a finite sum of components.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    dim: usize,
    components: Vec<Component>,
}

impl Phantom {
    pub fn new(dim: usize, components: Vec<Component>) -> Result<Self> {
        check_dim(dim)?;
        for c in &components {
            c.validate(dim)?;
        }
        Ok(Self { dim, components })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.components.iter().map(|c| c.eval(self.dim, x)).sum()
    }

    pub fn integral(&self) -> f64 {
        self.components.iter().map(|c| c.integral(self.dim)).sum()
    }

    /// Largest distance from the origin to the support.
    pub fn support_radius(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let (center, r) = c.bounding_ball(self.dim);
                norm(&center) + r
            })
            .fold(0.0, f64::max)
    }

    /// Concatenation of the components of both phantoms.
    pub fn union(&self, other: &Phantom) -> Result<Phantom> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!(
                "phantom dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        let mut components = self.components.clone();
        components.extend_from_slice(&other.components);
        Ok(Phantom {
            dim: self.dim,
            components,
        })
    }
}

/// Free-function form of [`Phantom::eval`].
pub fn eval_phantom(p: &Phantom, x: &Point) -> f64 {
    p.eval(x)
}

/// Uniform grid over `center + [−a, a]^axes`, embedded in `dim`-space.
///
/// With `axes < dim` the grid is a slice through `center` spanned by the
/// first `axes` coordinate directions. Samples are stored row-major with the
/// first coordinate varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    dim: usize,
    axes: usize,
    center: Point,
    half_width: f64,
    points_per_axis: usize,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(
        dim: usize,
        axes: usize,
        center: Point,
        half_width: f64,
        points_per_axis: usize,
    ) -> Result<Self> {
        check_dim(dim)?;
        if !(2..=dim).contains(&axes) {
            return Err(invalid(format!("grid with {axes} axes in dimension {dim}")));
        }
        if points_per_axis < 2 {
            return Err(invalid("grid needs at least 2 points per axis"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid(format!("grid half-width must be positive, got {half_width}")));
        }
        Ok(Self {
            dim,
            axes,
            center,
            half_width,
            points_per_axis,
            values: vec![0.0; points_per_axis.pow(axes as u32)],
        })
    }

    /// Full square/cube grid centred at the origin.
    pub fn centered(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(dim, dim, [0.0; 3], half_width, points_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                self.values.len()
            )));
        }
        self.values = values;
        Ok(self)
    }

    /// Same geometry, all values zero.
    pub fn zeroed(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    /// Coordinates of sample `index`.
    pub fn point(&self, index: usize) -> Point {
        let n = self.points_per_axis;
        let h = self.spacing();
        let mut p = self.center;
        let mut rest = index;
        for coord in p.iter_mut().take(self.axes) {
            *coord += (rest % n) as f64 * h - self.half_width;
            rest /= n;
        }
        p
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Largest distance from `origin` to a grid point.
    pub fn max_distance_from(&self, origin: &Point) -> f64 {
        self.center[..self.dim]
            .iter()
            .zip(origin)
            .enumerate()
            .map(|(k, (c, o))| (c - o).abs() + if k < self.axes { self.half_width } else { 0.0 })
            .map(|off| off * off)
            .sum::<f64>()
            .sqrt()
    }

    /// Samples `f` at every grid point.
    pub fn sample(mut self, f: impl Fn(&Point) -> f64 + Sync + Send) -> Self {
        let points: Vec<Point> = self.points().collect();
        let values = crate::par::map_indexed(points.len(), |i| f(&points[i]));
        self.values = values;
        self
    }
}

/// Shape of the detector surface.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Sphere of `radius` about the origin; `resolution` is `[count, 1]` in
    /// 2-D and `[polar, azimuth]` in 3-D.
    Sphere { radius: f64, resolution: [usize; 2] },
    /// Boundary of `[0, L]^n` with `per_face` midpoint cells per face axis.
    Box { extents: Point, per_face: usize },
}

/// Detector positions `z_i` with outward normals and surface weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSet {
    dim: usize,
    layout: Layout,
    points: Vec<Point>,
    normals: Vec<Point>,
    weights: Vec<f64>,
}

impl DetectorSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Radius for sphere layouts.
    pub fn radius(&self) -> Option<f64> {
        match self.layout {
            Layout::Sphere { radius, .. } => Some(radius),
            Layout::Box { .. } => None,
        }
    }

    /// Total boundary measure approximated by the weights.
    pub fn surface_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i f(z_i, n_i)`.
    pub fn integrate(&self, mut f: impl FnMut(&Point, &Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.normals)
            .zip(&self.weights)
            .map(|((z, n), w)| w * f(z, n))
            .sum()
    }

    /// Detector set with the same layout parameters; used to regenerate a
    /// layout from a file header.
    pub fn from_layout(dim: usize, layout: &Layout) -> Result<Self> {
        match *layout {
            Layout::Sphere { radius, resolution } => sphere_detectors(dim, radius, resolution),
            Layout::Box { extents, per_face } => box_detectors(dim, extents, per_face),
        }
    }
}

/// Detectors on the sphere `|z| = R`: equally spaced angles in 2-D,
/// Gauss–Legendre in `cos(polar)` times uniform azimuth in 3-D.
pub fn sphere_detectors(dim: usize, radius: f64, resolution: [usize; 2]) -> Result<DetectorSet> {
    check_dim(dim)?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(invalid(format!("sphere radius must be positive, got {radius}")));
    }
    let res = &resolution[..dim - 1];
    if let Some(&bad) = res.iter().find(|&&r| r < 4) {
        return Err(invalid(format!("detector resolution {bad} is below the minimum of 4")));
    }
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        let n = res[0];
        for i in 0..n {
            let (s, c) = (2.0 * PI * i as f64 / n as f64).sin_cos();
            normals.push([c, s, 0.0]);
            points.push([radius * c, radius * s, 0.0]);
            weights.push(2.0 * PI * radius / n as f64);
        }
    } else {
        let rule = GaussRule::new(res[0])?;
        let naz = res[1];
        let dphi = 2.0 * PI / naz as f64;
        for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
            let s = (1.0 - u * u).sqrt();
            for j in 0..naz {
                let (sp, cp) = (j as f64 * dphi).sin_cos();
                let nrm = [s * cp, s * sp, u];
                normals.push(nrm);
                points.push(nrm.map(|v| radius * v));
                weights.push(radius * radius * w * dphi);
            }
        }
    }
    let resolution = if dim == 2 { [res[0], 1] } else { resolution };
    Ok(DetectorSet {
        dim,
        layout: Layout::Sphere { radius, resolution },
        points,
        normals,
        weights,
    })
}

/// Midpoint-rule detectors on the faces of `[0, L]^n`.
pub fn box_detectors(dim: usize, extents: Point, per_face: usize) -> Result<DetectorSet> {
    check_dim(dim)?;
    if extents[..dim].iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(invalid(format!("box extents must be positive, got {extents:?}")));
    }
    if per_face == 0 {
        return Err(invalid("box layout needs at least one point per face"));
    }
    let mut extents = extents;
    extents[dim..].iter_mut().for_each(|l| *l = 0.0);
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut weights = Vec::new();
    for axis in 0..dim {
        let tangential: Vec<usize> = (0..dim).filter(|&k| k != axis).collect();
        let cell: f64 = tangential
            .iter()
            .map(|&k| extents[k] / per_face as f64)
            .product();
        for side in [0.0, 1.0] {
            let mut normal = [0.0; 3];
            normal[axis] = if side == 0.0 { -1.0 } else { 1.0 };
            let cells = per_face.pow(tangential.len() as u32);
            for c in 0..cells {
                let mut p = [0.0; 3];
                p[axis] = side * extents[axis];
                let mut rest = c;
                for &k in &tangential {
                    p[k] = ((rest % per_face) as f64 + 0.5) * extents[k] / per_face as f64;
                    rest /= per_face;
                }
                points.push(p);
                normals.push(normal);
                weights.push(cell);
            }
        }
    }
    Ok(DetectorSet {
        dim,
        layout: Layout::Box { extents, per_face },
        points,
        normals,
        weights,
    })
}
