//! The `smrt` command line.
//!
//! Every subcommand computes all of its outputs in memory first and only then
//! writes them, so a failing run leaves the output directory untouched.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{MethodChoice, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::ImageGrid;
use crate::identities::{default_suite, suite_csv};
use crate::invert_closed::reconstruct;
use crate::invert_series::{series_coefficients, series_reconstruct};
use crate::io::{encode_image, encode_pgm, encode_sinogram, load_image, load_sinogram, write_atomic};
use crate::metrics::{metrics, MetricsReport, StageTimer};
use crate::forward::forward_quadrature;

/// Worker-count override for the data-parallel stages.
pub const THREADS_ENV: &str = "SMRT_NUM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "smrt", version, about = "Spherical mean Radon transform: forward model, inversion, identity checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the configured phantom on the image grid.
    Phantom(RunArgs),
    /// Compute the sinogram of the configured phantom.
    Forward(RunArgs),
    /// Closed-form (or, on a box, series) inversion of a sinogram.
    Invert(InputArgs),
    /// Eigenfunction-series inversion on a box.
    SeriesInvert(InputArgs),
    /// Run the numerical identity suite and write its defects as CSV.
    ValidateIdentities(SuiteArgs),
    /// Compare a reconstruction file against the configured phantom.
    Metrics(InputArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["fbp2d", "fbp3d", "fbpnd", "series"])]
    pub method: Option<String>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub nlambda: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Input file; defaults to `sinogram.bin` (or `recon.raw` for `metrics`)
    /// in the output directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Only `seed` and `output.dir` are read from it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Files to write and the line to print once they are written.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub summary: String,
    pub success: bool,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(m) = &self.method {
            cfg.method = m.parse()?;
        }
        cfg.lambda_max = self.lambda_max.or(cfg.lambda_max);
        cfg.n_lambda = self.nlambda.or(cfg.n_lambda);
        cfg.cutoff = self.cutoff.or(cfg.cutoff);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.validate()?;
        let out = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        Ok((cfg, out))
    }
}

fn truth_on(cfg: &RunConfig, grid: &ImageGrid) -> ImageGrid {
    let phantom = cfg.phantom.clone();
    grid.zeroed().sample(move |x| phantom.eval(x))
}

fn image_files(out: &Path, stem: &str, grid: &ImageGrid) -> [(PathBuf, Vec<u8>); 2] {
    [
        (out.join(format!("{stem}.raw")), encode_image(grid)),
        (out.join(format!("{stem}.pgm")), encode_pgm(grid)),
    ]
}

fn run_phantom(args: &RunArgs) -> Result<Outcome> {
    let (cfg, out) = args.load()?;
    let grid = truth_on(&cfg, &cfg.image_grid()?);
    let summary = format!(
        "phantom: {} component(s) on {}^{} grid, max {:.4}",
        cfg.phantom.components().len(),
        grid.points_per_axis(),
        grid.axes(),
        grid.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    Ok(Outcome {
        files: image_files(&out, "phantom", &grid).into(),
        summary,
        success: true,
    })
}

fn run_forward(args: &RunArgs) -> Result<Outcome> {
    let (cfg, out) = args.load()?;
    let mut timer = StageTimer::new();
    let detectors = cfg.detectors()?;
    let radial = cfg.radial_grid(&detectors)?;
    let sino = timer
        .time("forward", || forward_quadrature(&cfg.phantom, &detectors, radial, cfg.nodes))
        .map_err(|e| e.in_stage("forward"))?
        .to_convention(cfg.convention);
    let summary = format!(
        "forward: {} detectors x {} radii (r_max {:.4}) in {:.2}s",
        sino.detectors().len(),
        sino.radial().len(),
        sino.radial().r_max(),
        timer.stages()[0].1
    );
    Ok(Outcome {
        files: vec![(out.join("sinogram.bin"), encode_sinogram(&sino))],
        summary,
        success: true,
    })
}

fn run_invert(args: &InputArgs, force_series: bool) -> Result<Outcome> {
    let (cfg, out) = args.run.load()?;
    let series = force_series || cfg.method == MethodChoice::Series || cfg.uses_series();
    if series && !cfg.uses_series() {
        return Err(Error::Config("series inversion needs box geometry".into()));
    }
    let input = args.input.clone().unwrap_or_else(|| out.join("sinogram.bin"));
    let mut timer = StageTimer::new();
    let sino = timer.time("load", || load_sinogram(&input))?;
    let grid = cfg.image_grid()?;
    let recon = if series {
        let cutoff = match cfg.cutoff {
            Some(c) => c,
            None => cfg.box_domain()?.default_cutoff(grid.points_per_axis()),
        };
        let coeffs = timer
            .time("coefficients", || series_coefficients(&sino, cutoff))
            .map_err(|e| e.in_stage("coefficients"))?;
        timer
            .time("summation", || series_reconstruct(&coeffs, &grid))
            .map_err(|e| e.in_stage("summation"))?
    } else {
        let opts = cfg.reconstruct_options()?;
        timer.time("reconstruct", || reconstruct(&sino, &grid, &opts))?
    };
    let truth = truth_on(&cfg, &grid);
    let calibration = if series { 1.0 } else { cfg.calibration };
    let report = metrics(&recon, &truth, calibration)
        .map_err(|e| e.in_stage("metrics"))?
        .with_timings(&timer);
    let summary = format!(
        "{}: rel_l2 {:.4e}, max_abs {:.4e}, {:.2}s",
        if series { "series-invert" } else { "invert" },
        report.rel_l2,
        report.max_abs,
        report.timings.iter().map(|t| t.1).sum::<f64>()
    );
    let mut files: Vec<_> = image_files(&out, "recon", &recon).into();
    files.push((out.join("metrics.txt"), report.to_string().into_bytes()));
    Ok(Outcome {
        files,
        summary,
        success: true,
    })
}

fn run_metrics(args: &InputArgs) -> Result<Outcome> {
    let (cfg, out) = args.run.load()?;
    let input = args.input.clone().unwrap_or_else(|| out.join("recon.raw"));
    let recon = load_image(&input)?;
    let report: MetricsReport = metrics(&recon, &truth_on(&cfg, &recon), cfg.calibration)?;
    Ok(Outcome {
        summary: format!("metrics: rel_l2 {:.4e}, max_abs {:.4e}", report.rel_l2, report.max_abs),
        files: vec![(out.join("metrics.txt"), report.to_string().into_bytes())],
        success: true,
    })
}

fn run_identities(args: &SuiteArgs) -> Result<Outcome> {
    let cfg = args.config.as_ref().map(RunConfig::load).transpose()?;
    let seed = args.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let out = args
        .out
        .clone()
        .or_else(|| cfg.map(|c| c.output_dir))
        .unwrap_or_else(|| PathBuf::from("."));
    let rows = default_suite(seed).map_err(|e| e.in_stage("identities"))?;
    let failed: Vec<_> = rows.iter().filter(|r| !r.passed()).collect();
    let worst = rows
        .iter()
        .max_by(|a, b| (a.defect / a.threshold).total_cmp(&(b.defect / b.threshold)))
        .map(|r| format!("{} {} ({:.2e})", r.identity, r.case, r.defect))
        .unwrap_or_default();
    Ok(Outcome {
        summary: format!(
            "validate-identities: {} rows, {} failed; closest to threshold: {worst}",
            rows.len(),
            failed.len()
        ),
        success: failed.is_empty(),
        files: vec![(out.join("identities.csv"), suite_csv(&rows).into_bytes())],
    })
}

/// Runs one parsed command without touching the filesystem beyond its inputs.
pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Phantom(a) => run_phantom(a),
        Command::Forward(a) => run_forward(a),
        Command::Invert(a) => run_invert(a, false),
        Command::SeriesInvert(a) => run_invert(a, true),
        Command::ValidateIdentities(a) => run_identities(a),
        Command::Metrics(a) => run_metrics(a),
    }
}

fn write_outcome(outcome: &Outcome) -> Result<()> {
    for (path, bytes) in &outcome.files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_atomic(path, bytes)?;
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV}={value} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("{THREADS_ENV}: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<()> {
    Ok(())
}

// every variant's message already embeds its source
fn report(e: &Error) {
    eprintln!("error: {e}");
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| execute(&cli.command)).and_then(|o| {
        write_outcome(&o)?;
        Ok(o)
    });
    match result {
        Ok(o) => {
            println!("{}", o.summary);
            if o.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e @ Error::Config(_)) => {
            report(&e);
            eprintln!("usage: smrt <SUBCOMMAND> --config PATH [--out DIR] (see `smrt --help`)");
            ExitCode::from(2)
        }
        Err(e) => {
            report(&e);
            ExitCode::FAILURE
        }
    }
}
