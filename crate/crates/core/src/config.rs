//! Run configuration: flat `key=value` text with dotted section prefixes.
//!
//! ```text
//! # comments run to the end of the line
//! dimension=2
//! geometry=sphere            # or box
//! geometry.radius=1
//! geometry.resolution=256    # 3-D: polar,azimuth e.g. 32,64
//! geometry.extents=1,1       # box only
//! geometry.per_face=64       # box only
//! phantom.1.shape=bump       # bump | ball | box_mode
//! phantom.1.center=0.2,0.1
//! phantom.1.radius=0.4
//! phantom.1.amplitude=1
//! sinogram.nr=512
//! sinogram.r_max=2           # default 2R (sphere) or the support reach (box)
//! sinogram.nodes=24
//! grid.points=128
//! grid.half_width=0.63
//! grid.center=0,0
//! grid.axes=2                # 2 in 3-D gives the central z slice
//! spectral.lambda_max=…      # default π/Δr
//! spectral.n_lambda=2048     # default 4 Nr
//! series.cutoff=64           # default π N / (2 L_max)
//! method=auto                # auto | fbp2d | fbp3d | fbpnd | series
//! backprojection=analytic    # analytic | grid
//! calibration=-1
//! seed=7
//! output.dir=out
//! ```
//!
//! Unknown keys are errors, so a typo never silently falls back to a default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forward::{MeasureConvention, RadialGrid};
use crate::geometry::{box_detectors, sphere_detectors, Component, DetectorSet, ImageGrid, Phantom, Point};
use crate::invert_closed::{Backprojection, Method, ReconstructOptions, DEFAULT_CALIBRATION};
use crate::invert_series::{covering_radial_grid, BoxDomain};

/// Largest phantom support radius as a fraction of the detector radius.
pub const SUPPORT_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryConfig {
    Sphere { radius: f64, resolution: [usize; 2] },
    Box { extents: Point, per_face: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Fbp2d,
    Fbp3d,
    FbpNd,
    Series,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Self::Auto,
            "fbp2d" => Self::Fbp2d,
            "fbp3d" => Self::Fbp3d,
            "fbpnd" => Self::FbpNd,
            "series" => Self::Series,
            _ => return Err(Error::Config(format!("unknown method `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub points: usize,
    pub half_width: f64,
    pub center: Point,
    pub axes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub geometry: GeometryConfig,
    pub phantom: Phantom,
    pub nr: usize,
    pub r_max: Option<f64>,
    pub nodes: usize,
    pub convention: MeasureConvention,
    pub grid: GridConfig,
    pub lambda_max: Option<f64>,
    pub n_lambda: Option<usize>,
    pub cutoff: Option<f64>,
    pub method: MethodChoice,
    pub backprojection: Backprojection,
    pub calibration: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn point(&mut self, key: &str, dim: usize) -> Result<Option<Point>> {
        let Some(v) = self.list(key)? else {
            return Ok(None);
        };
        if v.len() != dim {
            return Err(Error::Config(format!("`{key}` needs {dim} values, got {}", v.len())));
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&v);
        Ok(Some(p))
    }
}

fn parse_entries(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if map.insert(k.clone(), v).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", no + 1)));
        }
    }
    Ok(Entries(map))
}

fn parse_component(e: &mut Entries, id: &str, dim: usize, default_extents: Point) -> Result<Component> {
    let key = |f: &str| format!("phantom.{id}.{f}");
    let shape = e
        .take(&key("shape"))
        .ok_or_else(|| Error::Config(format!("`{}` is required", key("shape"))))?;
    let amplitude = e.parse(&key("amplitude"))?.unwrap_or(1.0);
    let required = |e: &mut Entries, f: &str| -> Result<f64> {
        e.parse(&key(f))?
            .ok_or_else(|| Error::Config(format!("`{}` is required", key(f))))
    };
    Ok(match shape.as_str() {
        "bump" | "ball" => {
            let center = e.point(&key("center"), dim)?.unwrap_or([0.0; 3]);
            let radius = required(e, "radius")?;
            if shape == "bump" {
                Component::bump(center, radius, amplitude)
            } else {
                Component::ball(center, radius, amplitude)
            }
        }
        "box_mode" => {
            let extents = e.point(&key("extents"), dim)?.unwrap_or(default_extents);
            let m = e
                .list(&key("mode"))?
                .ok_or_else(|| Error::Config(format!("`{}` is required", key("mode"))))?;
            if m.len() != dim || m.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
                return Err(Error::Config(format!("`{}` needs {dim} positive integers", key("mode"))));
            }
            let mut mode = [0; 3];
            mode[..dim].iter_mut().zip(&m).for_each(|(d, &v)| *d = v as usize);
            Component::box_mode(extents, mode, amplitude)
        }
        s => return Err(Error::Config(format!("`{}`: unknown shape `{s}`", key("shape")))),
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = parse_entries(text)?;
        let dim: usize = e
            .parse("dimension")?
            .ok_or_else(|| Error::Config("`dimension` is required".into()))?;
        if !(2..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }

        let kind = e.take("geometry").unwrap_or_else(|| "sphere".into());
        let geometry = match kind.as_str() {
            "sphere" => {
                let radius = e.parse("geometry.radius")?.unwrap_or(1.0);
                let res = e
                    .list("geometry.resolution")?
                    .unwrap_or(if dim == 2 { vec![256.0] } else { vec![32.0, 64.0] });
                if res.len() != dim - 1 || res.iter().any(|&r| r < 1.0 || r.fract() != 0.0) {
                    return Err(Error::Config(format!(
                        "`geometry.resolution` needs {} positive integers",
                        dim - 1
                    )));
                }
                GeometryConfig::Sphere {
                    radius,
                    resolution: [res[0] as usize, res.get(1).map_or(1, |&r| r as usize)],
                }
            }
            "box" => GeometryConfig::Box {
                extents: e.point("geometry.extents", dim)?.unwrap_or_else(|| {
                    let mut l = [0.0; 3];
                    l[..dim].fill(1.0);
                    l
                }),
                per_face: e.parse("geometry.per_face")?.unwrap_or(64),
            },
            s => return Err(Error::Config(format!("unknown geometry `{s}`"))),
        };
        let box_extents = match geometry {
            GeometryConfig::Box { extents, .. } => extents,
            GeometryConfig::Sphere { .. } => [1.0, 1.0, if dim == 3 { 1.0 } else { 0.0 }],
        };

        let mut ids: Vec<String> = e
            .0
            .keys()
            .filter_map(|k| k.strip_prefix("phantom.")?.split_once('.').map(|(id, _)| id.to_string()))
            .collect();
        ids.sort_by_key(|id| id.parse::<u64>().unwrap_or(u64::MAX));
        ids.dedup();
        let components = ids
            .iter()
            .map(|id| parse_component(&mut e, id, dim, box_extents))
            .collect::<Result<Vec<_>>>()?;
        let phantom = Phantom::new(dim, components).map_err(|err| Error::Config(format!("phantom: {err}")))?;

        let (default_center, default_half) = match geometry {
            GeometryConfig::Sphere { radius, .. } => ([0.0; 3], 0.6 * radius),
            GeometryConfig::Box { extents, .. } => {
                let l_min = extents[..dim].iter().cloned().fold(f64::INFINITY, f64::min);
                (extents.map(|l| 0.5 * l), 0.45 * l_min)
            }
        };
        let grid = GridConfig {
            points: e.parse("grid.points")?.unwrap_or(if dim == 2 { 128 } else { 64 }),
            half_width: e.parse("grid.half_width")?.unwrap_or(default_half),
            center: e.point("grid.center", dim)?.unwrap_or(default_center),
            axes: e.parse("grid.axes")?.unwrap_or(dim),
        };

        let convention = match e.take("sinogram.convention").as_deref() {
            None | Some("surface") => MeasureConvention::Surface,
            Some("normalized") => MeasureConvention::Normalized,
            Some(s) => return Err(Error::Config(format!("unknown sinogram convention `{s}`"))),
        };
        let backprojection = match e.take("backprojection").as_deref() {
            None | Some("analytic") => Backprojection::AnalyticGradient,
            Some("grid") => Backprojection::GridDivergence,
            Some(s) => return Err(Error::Config(format!("unknown backprojection `{s}`"))),
        };

        let cfg = RunConfig {
            dim,
            geometry,
            phantom,
            nr: e.parse("sinogram.nr")?.unwrap_or(512),
            r_max: e.parse("sinogram.r_max")?,
            nodes: e.parse("sinogram.nodes")?.unwrap_or(crate::forward::DEFAULT_NODES),
            convention,
            grid,
            lambda_max: e.parse("spectral.lambda_max")?,
            n_lambda: e.parse("spectral.n_lambda")?,
            cutoff: e.parse("series.cutoff")?,
            method: e.parse::<String>("method")?.map_or(Ok(MethodChoice::Auto), |m| m.parse())?,
            backprojection,
            calibration: e.parse("calibration")?.unwrap_or(DEFAULT_CALIBRATION),
            seed: e.parse("seed")?.unwrap_or(0),
            output_dir: e.take("output.dir").map_or_else(|| PathBuf::from("."), PathBuf::from),
        };
        if let Some(k) = e.0.keys().next() {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks that the pieces fit together; called by [`RunConfig::parse`]
    /// and again after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        if self.phantom.components().is_empty() {
            return Err(Error::Config("the phantom has no components".into()));
        }
        let grid = self.image_grid().map_err(|e| Error::Config(format!("grid: {e}")))?;
        self.detectors().map_err(|e| Error::Config(format!("geometry: {e}")))?;
        match self.geometry {
            GeometryConfig::Sphere { radius, .. } => {
                let support = self.phantom.support_radius();
                if support > SUPPORT_MARGIN * radius {
                    return Err(Error::Config(format!(
                        "phantom support radius {support} exceeds {SUPPORT_MARGIN} R = {}",
                        SUPPORT_MARGIN * radius
                    )));
                }
                if grid.max_distance_from(&[0.0; 3]) >= radius {
                    return Err(Error::Config("the image grid reaches the detector sphere".into()));
                }
                if self.method == MethodChoice::Series {
                    return Err(Error::Config("series inversion needs box geometry".into()));
                }
            }
            GeometryConfig::Box { .. } => {
                let domain = self.box_domain()?;
                if !(0..grid.len()).all(|i| domain.contains(&grid.point(i))) {
                    return Err(Error::Config("the image grid leaves the box".into()));
                }
                if !matches!(self.method, MethodChoice::Auto | MethodChoice::Series) {
                    return Err(Error::Config("closed-form inversion needs sphere geometry".into()));
                }
            }
        }
        let positive = [
            ("sinogram.nr", self.nr as f64 >= 2.0),
            ("sinogram.r_max", self.r_max.is_none_or(|r| r > 0.0)),
            ("spectral.lambda_max", self.lambda_max.is_none_or(|l| l > 0.0)),
            ("series.cutoff", self.cutoff.is_none_or(|c| c > 0.0)),
            ("calibration", self.calibration.is_finite() && self.calibration != 0.0),
        ];
        if let Some((key, _)) = positive.iter().find(|(_, ok)| !ok) {
            return Err(Error::Config(format!("`{key}` is out of range")));
        }
        Ok(())
    }

    pub fn detectors(&self) -> Result<DetectorSet> {
        match self.geometry {
            GeometryConfig::Sphere { radius, resolution } => sphere_detectors(self.dim, radius, resolution),
            GeometryConfig::Box { extents, per_face } => box_detectors(self.dim, extents, per_face),
        }
    }

    pub fn box_domain(&self) -> Result<BoxDomain> {
        match self.geometry {
            GeometryConfig::Box { extents, .. } => BoxDomain::new(self.dim, extents),
            GeometryConfig::Sphere { .. } => Err(Error::Config("no box in a sphere geometry".into())),
        }
    }

    pub fn image_grid(&self) -> Result<ImageGrid> {
        ImageGrid::new(self.dim, self.grid.axes, self.grid.center, self.grid.half_width, self.grid.points)
    }

    /// `[0, r_max]` with `Nr` samples: `2R` on a sphere, past the support of
    /// the phantom on a box.
    pub fn radial_grid(&self, detectors: &DetectorSet) -> Result<RadialGrid> {
        match (self.r_max, &self.geometry) {
            (Some(r), _) => RadialGrid::new(r, self.nr),
            (None, GeometryConfig::Sphere { radius, .. }) => RadialGrid::new(2.0 * radius, self.nr),
            (None, GeometryConfig::Box { .. }) => {
                covering_radial_grid(&self.phantom, detectors, &self.box_domain()?, self.nr)
            }
        }
    }

    pub fn reconstruct_options(&self) -> Result<ReconstructOptions> {
        let method = match self.method {
            MethodChoice::Auto => Method::Auto,
            MethodChoice::Fbp2d => Method::Fbp2d,
            MethodChoice::Fbp3d => Method::Fbp3d,
            MethodChoice::FbpNd => Method::FbpNd,
            MethodChoice::Series => return Err(Error::Config("series is not a closed-form method".into())),
        };
        Ok(ReconstructOptions {
            method,
            lambda_max: self.lambda_max,
            n_lambda: self.n_lambda,
            backprojection: self.backprojection,
            calibration: self.calibration,
        })
    }

    /// Series inversion is used for box geometry, closed form otherwise.
    pub fn uses_series(&self) -> bool {
        matches!(self.geometry, GeometryConfig::Box { .. })
    }
}
