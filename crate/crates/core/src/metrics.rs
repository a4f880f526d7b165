//! Reconstruction error metrics and per-stage timings.

use std::fmt;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// `‖recon − truth‖₂ / ‖truth‖₂`.
    pub rel_l2: f64,
    pub max_abs: f64,
    pub calibration: f64,
    /// Wall-clock seconds per named stage, in execution order.
    pub timings: Vec<(String, f64)>,
}

fn check_shapes(recon: &ImageGrid, truth: &ImageGrid) -> Result<()> {
    let same = recon.dim() == truth.dim()
        && recon.axes() == truth.axes()
        && recon.points_per_axis() == truth.points_per_axis()
        && recon.center() == truth.center()
        && recon.half_width() == truth.half_width();
    if !same {
        return Err(Error::ShapeMismatch("reconstruction and truth grids differ".into()));
    }
    Ok(())
}

/// Errors over the grid points accepted by `keep`.
pub fn metrics_where(
    recon: &ImageGrid,
    truth: &ImageGrid,
    calibration: f64,
    keep: impl Fn(&Point) -> bool,
) -> Result<MetricsReport> {
    check_shapes(recon, truth)?;
    let (mut diff2, mut norm2, mut max_abs) = (0.0, 0.0, 0.0f64);
    for ((x, r), t) in truth.points().zip(recon.values()).zip(truth.values()) {
        if keep(&x) {
            diff2 += (r - t) * (r - t);
            norm2 += t * t;
            max_abs = max_abs.max((r - t).abs());
        }
    }
    if norm2 == 0.0 {
        return Err(Error::Degenerate("truth has zero norm on the compared points".into()));
    }
    Ok(MetricsReport {
        rel_l2: (diff2 / norm2).sqrt(),
        max_abs,
        calibration,
        timings: Vec::new(),
    })
}

/// Errors over the whole grid.
pub fn metrics(recon: &ImageGrid, truth: &ImageGrid, calibration: f64) -> Result<MetricsReport> {
    metrics_where(recon, truth, calibration, |_| true)
}

impl MetricsReport {
    pub fn with_timings(mut self, timer: &StageTimer) -> Self {
        self.timings = timer.stages().to_vec();
        self
    }
}

/// `key=value` lines: `rel_l2`, `max_abs`, `calibration`, then
/// `time.<stage>` in seconds.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rel_l2={:e}", self.rel_l2)?;
        writeln!(f, "max_abs={:e}", self.max_abs)?;
        writeln!(f, "calibration={}", self.calibration)?;
        for (stage, secs) in &self.timings {
            writeln!(f, "time.{stage}={secs:e}")?;
        }
        Ok(())
    }
}

/// Records the wall-clock time of named stages.
#[derive(Debug, Clone, Default)]
pub struct StageTimer {
    stages: Vec<(String, f64)>,
}

impl StageTimer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        // a stage always reports a positive duration
        let secs = start.elapsed().max(Duration::from_nanos(1)).as_secs_f64();
        self.stages.push((stage.to_string(), secs));
        out
    }

    pub fn stages(&self) -> &[(String, f64)] {
        &self.stages
    }
}
