//! Acceptance criteria 1–11, one `PASS`/`FAIL` line each. Runs without the
//! libtest harness so the lines always reach the console; exits nonzero if
//! any criterion fails.

use std::time::Instant;

use smrt_core::forward::{forward_quadrature, RadialGrid, Sinogram};
use smrt_core::geometry::{box_detectors, sphere_detectors, Component, DetectorSet, ImageGrid, Phantom, Point};
use smrt_core::identities::{
    convolution_representation_check, default_suite, modified_helmholtz_check, DefectRow, BOUNDARY_NODES_2D,
};
use smrt_core::invert_closed::{
    calibrate, filter_2d, filter_3d, filter_nd, reconstruct, t_grid_for, Method, ReconstructOptions, SpectralFilter, SpectralGrid,
};
use smrt_core::invert_series::{
    covering_radial_grid, interior_support_test, series_coefficients, series_reconstruct, BoxDomain,
};

type Outcome = (bool, String);

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    (d / n).sqrt()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn sphere_data(p: &Phantom, resolution: [usize; 2], nr: usize) -> (DetectorSet, Sinogram) {
    let d = sphere_detectors(p.dim(), 1.0, resolution).unwrap();
    let s = forward_quadrature(p, &d, RadialGrid::new(2.0, nr).unwrap(), 24).unwrap();
    (d, s)
}

fn box_data(p: &Phantom, domain: &BoxDomain, per_face: usize, nr: usize) -> Sinogram {
    let det = box_detectors(domain.dim(), domain.extents(), per_face).unwrap();
    let radial = covering_radial_grid(p, &det, domain, nr).unwrap();
    forward_quadrature(p, &det, radial, 24).unwrap()
}

/// Runs `f` on a single worker.
fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

fn bump(center: Point, rho: f64, amplitude: f64) -> Component {
    Component::bump(center, rho, amplitude)
}

fn criterion_1() -> Outcome {
    let p = Phantom::new(2, vec![bump([0.2, 0.1, 0.0], 0.4, 1.0)]).unwrap();
    let grid = ImageGrid::centered(2, 0.63, 128).unwrap();
    let start = Instant::now();
    let (_, s) = single_threaded(|| sphere_data(&p, [256, 1], 512));
    let lambda_max = std::f64::consts::PI / s.radial().step();
    let opts = ReconstructOptions {
        method: Method::Fbp2d,
        lambda_max: Some(lambda_max),
        n_lambda: Some(2048),
        calibration: 1.0,
        ..Default::default()
    };
    let raw = single_threaded(|| reconstruct(&s, &grid, &opts).unwrap());
    let secs = start.elapsed().as_secs_f64();
    let alpha = calibrate(&p, &raw).unwrap();
    let recon: Vec<f64> = raw.values().iter().map(|v| alpha * v).collect();
    let truth = grid.clone().sample(|x| p.eval(x));
    let err = rel_l2(&recon, truth.values());
    (
        err <= 0.10 && secs <= 300.0,
        format!("2-D bump round trip: rel L2 {err:.3e} (<= 0.10), calibration {alpha:.6}, {secs:.1}s single-threaded (<= 300s)"),
    )
}

fn criterion_2() -> Outcome {
    let p = Phantom::new(3, vec![bump([0.2, 0.1, 0.0], 0.4, 1.0)]).unwrap();
    let grid = ImageGrid::new(3, 2, [0.0; 3], 0.63, 64).unwrap();
    let start = Instant::now();
    let (_, s) = sphere_data(&p, [32, 64], 512);
    let opts = ReconstructOptions {
        method: Method::Fbp3d,
        ..Default::default()
    };
    let img = reconstruct(&s, &grid, &opts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let truth = grid.clone().sample(|x| p.eval(x));
    let err = rel_l2(img.values(), truth.values());
    (
        err <= 0.10 && secs <= 600.0,
        format!("3-D bump, 32x64 detectors, 64^2 central slice: rel L2 {err:.3e} (<= 0.10), {secs:.1}s (<= 600s)"),
    )
}

fn criterion_3() -> Outcome {
    // n = 2: the general filter reproduces the 2-D filter bit for bit; both
    // rebuild their kernel tables per call, so every 16th row is compared
    let p2 = Phantom::new(2, vec![bump([0.2, 0.1, 0.0], 0.4, 1.0)]).unwrap();
    let (_, s2) = sphere_data(&p2, [256, 1], 512);
    let grid2 = ImageGrid::centered(2, 0.63, 128).unwrap();
    let tg2 = t_grid_for(*s2.radial(), 1.0, &grid2, 0.0).unwrap();
    let sg2 = SpectralGrid::for_radial(s2.radial(), None, Some(2048)).unwrap();
    let identical = (0..s2.detectors().len()).step_by(16).all(|i| {
        let a = filter_2d(s2.row(i), &tg2, sg2).unwrap();
        let b = filter_nd(s2.row(i), &tg2, sg2, 2).unwrap();
        a == b
    });

    // n = 3: spectral filter against the differential one on every row, with
    // the kernel tables built once
    let p3 = Phantom::new(3, vec![bump([0.2, 0.1, 0.0], 0.4, 1.0)]).unwrap();
    let (_, s3) = sphere_data(&p3, [32, 64], 512);
    let grid3 = ImageGrid::new(3, 2, [0.0; 3], 0.63, 64).unwrap();
    let tg3 = t_grid_for(*s3.radial(), 1.0, &grid3, 0.0).unwrap();
    let sg3 = SpectralGrid::for_radial(s3.radial(), None, None).unwrap();
    let nd3 = SpectralFilter::new(3, tg3.clone(), sg3).unwrap();
    let identical = identical && filter_nd(s3.row(0), &tg3, sg3, 3).unwrap() == nd3.apply(s3.row(0)).unwrap();
    let worst = (0..s3.detectors().len())
        .map(|i| {
            let a = nd3.apply(s3.row(i)).unwrap();
            let b = filter_3d(s3.row(i), &tg3).unwrap();
            rel_l2(&a.h, &b.h)
        })
        .fold(0.0, f64::max);
    (
        identical && worst <= 3e-2,
        format!("n=2 nd filter identical to 2-D filter: {identical}; n=3 worst row rel L2 vs 3-D filter {worst:.3e} (<= 3e-2)"),
    )
}

fn criterion_4() -> Outcome {
    let phantoms = [
        ("disk", vec![Component::ball([-0.1, 0.15, 0.0], 0.3, 1.0)]),
        ("bump", vec![bump([0.2, 0.1, 0.0], 0.4, 1.0)]),
        ("two-bump", vec![bump([0.3, -0.2, 0.0], 0.25, 1.0), bump([-0.25, 0.2, 0.0], 0.3, 0.7)]),
    ];
    let grid = ImageGrid::centered(2, 0.63, 64).unwrap();
    let opts = ReconstructOptions {
        calibration: 1.0,
        ..Default::default()
    };
    let mut alphas = Vec::new();
    for (_, components) in &phantoms {
        let p = Phantom::new(2, components.clone()).unwrap();
        for n in [128, 256, 512] {
            let (_, s) = sphere_data(&p, [n, 1], 512);
            alphas.push(calibrate(&p, &reconstruct(&s, &grid, &opts).unwrap()).unwrap());
        }
    }
    let mean = alphas.iter().sum::<f64>() / alphas.len() as f64;
    let spread = alphas.iter().map(|a| (a - mean).abs()).fold(0.0, f64::max) / mean.abs();
    let listed: Vec<String> = alphas.iter().map(|a| format!("{a:.5}")).collect();
    (
        spread <= 1e-2,
        format!(
            "calibration over {{disk, bump, two-bump}} x {{128, 256, 512}} detectors: [{}], max deviation from mean {spread:.3e} (<= 1e-2)",
            listed.join(", ")
        ),
    )
}

fn worst<'a>(rows: impl Iterator<Item = &'a DefectRow>) -> (usize, f64) {
    rows.fold((0, 0.0f64), |(n, w), r| (n + 1, w.max(r.defect)))
}

fn criterion_5(rows: &[DefectRow]) -> Outcome {
    let layer = |dim: &str| {
        worst(
            rows.iter()
                .filter(|r| r.identity == "single_layer" && r.case.starts_with(dim) && r.case.contains("r0=0.5")),
        )
    };
    let (n2, w2) = layer("n=2");
    let (n3, w3) = layer("n=3");
    // 2-D k ≤ 4 (9 harmonics), 3-D k ≤ 2 (9 harmonics), 3 wavenumbers, 2 radii
    let complete = n2 == 9 * 6 && n3 == 9 * 6;
    (
        complete && w2.max(w3) <= 1e-6,
        format!("single-layer identities: {n2} 2-D cases worst {w2:.3e}, {n3} 3-D cases worst {w3:.3e} (<= 1e-6)"),
    )
}

fn criterion_6(rows: &[DefectRow]) -> Outcome {
    let (n, w) = worst(rows.iter().filter(|r| r.identity == "symmetry"));
    let lambdas = ["lambda=1", "lambda=3", "lambda=7"]
        .iter()
        .all(|l| rows.iter().any(|r| r.identity == "symmetry" && r.case.ends_with(l)));
    (
        n >= 2 * 10 * 3 && lambdas && w <= 1e-6,
        format!("symmetry of I(x, y): {n} cases (10 random pairs x 3 wavenumbers x 2 dims, {BOUNDARY_NODES_2D} nodes in 2-D), worst {w:.3e} (<= 1e-6)"),
    )
}

fn criterion_7(rows: &[DefectRow]) -> Outcome {
    let (n, w) = worst(rows.iter().filter(|r| r.identity == "wronskian"));
    let noted = rows
        .iter()
        .filter(|r| r.identity == "wronskian")
        .all(|r| r.note.contains("printed"));
    (
        n == 4 && noted && w <= 1e-9,
        format!("wronskian for nu in {{0, 1/2, 1, 3/2}}, t in [1e-3, 100]: worst {w:.3e} (<= 1e-9); differing printed constant noted: {noted}"),
    )
}

fn criterion_8(rows: &[DefectRow]) -> Outcome {
    let (n_mod, w_mod) = worst(rows.iter().filter(|r| r.identity == "helmholtz_modified"));
    let (_, w_conv) = worst(rows.iter().filter(|r| r.identity == "convolution"));

    // modified Helmholtz under boundary refinement, down to round-off
    let (x, y) = ([0.3, -0.2, 0.0], [-0.1, 0.4, 0.0]);
    let helm: Vec<f64> = [32, 64, 128, 256]
        .into_iter()
        .map(|n| modified_helmholtz_check(2, &x, &y, 7.0, 1.0, [n, 1]).unwrap())
        .collect();
    let helm_monotone = helm.windows(2).all(|w| w[1] <= w[0] || w[1] <= 1e-12);

    // convolution representation: envelope of the oscillating truncation
    // error over each octave of λ_max
    let rho = 0.4;
    let p = Phantom::new(2, vec![bump([0.0; 3], rho, 1.0)]).unwrap();
    let y = [0.2, 0.1, 0.0];
    let envelope = |lo: f64| {
        (0..8)
            .map(|i| {
                let m = lo * 2f64.powf(i as f64 / 8.0);
                convolution_representation_check(&p, &y, SpectralGrid::new(m / rho, 2048).unwrap()).unwrap()
            })
            .fold(0.0, f64::max)
    };
    let env: Vec<f64> = [10.0, 20.0, 40.0, 80.0].into_iter().map(envelope).collect();
    let conv_monotone = env.windows(2).all(|w| w[1] < w[0]);

    let fmt = |v: &[f64]| v.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>().join(" ");
    (
        w_mod <= 1e-6 && w_conv <= 2e-2 && helm_monotone && conv_monotone,
        format!(
            "modified Helmholtz: {n_mod} cases worst {w_mod:.3e} (<= 1e-6), refinement [{}]; convolution: {w_conv:.3e} (<= 2e-2), octave envelopes [{}]",
            fmt(&helm),
            fmt(&env)
        ),
    )
}

fn criterion_9() -> Outcome {
    let domain = BoxDomain::unit(2).unwrap();
    let grid = ImageGrid::new(2, 2, [0.5, 0.5, 0.0], 0.45, 64).unwrap();
    let p = Phantom::new(2, vec![bump([0.5, 0.45, 0.0], 0.3, 1.0)]).unwrap();
    let s = box_data(&p, &domain, 64, 512);
    let c = series_coefficients(&s, 64.0).unwrap();
    let img = series_reconstruct(&c, &grid).unwrap();
    let truth = grid.clone().sample(|x| p.eval(x));
    let err = rel_l2(img.values(), truth.values());
    let imag = c.max_imag_residual() / c.alpha_norm();

    let mode = Phantom::new(2, vec![Component::box_mode([1.0, 1.0, 0.0], [1, 1, 0], 1.0)]).unwrap();
    let cm = series_coefficients(&box_data(&mode, &domain, 64, 512), 64.0).unwrap();
    let delta = cm
        .terms()
        .iter()
        .map(|t| (t.alpha - if t.index.m() == [1, 1] { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    (
        err <= 0.10 && imag <= 1e-3 && delta <= 2e-2,
        format!(
            "unit-square series, cutoff 64 ({} modes): rel L2 {err:.3e} (<= 0.10), max imag residual / |alpha| {imag:.3e} (<= 1e-3), single eigenfunction max |alpha - delta| {delta:.3e} (<= 2e-2)",
            c.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let domain = BoxDomain::unit(2).unwrap();
    let grid = ImageGrid::new(2, 2, [0.5, 0.5, 0.0], 0.45, 48).unwrap();
    let cutoff = domain.default_cutoff(48);
    let amplitude = 1.0;
    let outside = Phantom::new(2, vec![bump([1.45, 0.5, 0.0], 0.35, amplitude)]).unwrap();
    let inside = Phantom::new(2, vec![bump([0.5, 0.45, 0.0], 0.3, 1.0)]).unwrap();
    let both = inside.union(&outside).unwrap();

    let ext = interior_support_test(&outside, &domain, 64, 512, &grid, cutoff).unwrap();
    let rms = (ext.values().iter().map(|v| v * v).sum::<f64>() / ext.len() as f64).sqrt() / amplitude;
    let mixed = interior_support_test(&both, &domain, 64, 512, &grid, cutoff).unwrap();
    let truth = grid.clone().sample(|x| inside.eval(x));
    let err = rel_l2(mixed.values(), truth.values());
    (
        rms <= 0.05 && err <= 0.05,
        format!("exterior bump alone: interior rms / amplitude {rms:.3e} (<= 0.05); interior + exterior vs interior truth: rel L2 {err:.3e} (<= 0.05)"),
    )
}

fn criterion_11() -> Outcome {
    let mut zero_ok = true;
    let mut worst_sup = 0.0f64;
    let mut check_sum = |a: &[f64], b: &[f64], ab: &[f64]| {
        let scale = max_abs(ab).max(f64::MIN_POSITIVE);
        let d = a.iter().zip(b).zip(ab).map(|((x, y), z)| (x + y - z).abs()).fold(0.0, f64::max);
        worst_sup = worst_sup.max(d / scale);
    };
    let add = |s: &Sinogram, t: &Sinogram| -> Sinogram {
        let v = s.values().iter().zip(t.values()).map(|(a, b)| a + b).collect();
        s.clone().with_values(v).unwrap()
    };

    // closed form, 2-D and 3-D, every filter
    for (dim, res, methods) in [
        (2, [64, 1], vec![Method::Fbp2d, Method::FbpNd]),
        (3, [8, 16], vec![Method::Fbp3d, Method::FbpNd]),
    ] {
        let p1 = Phantom::new(dim, vec![bump([0.2, 0.1, 0.0], 0.4, 1.0)]).unwrap();
        let p2 = Phantom::new(dim, vec![Component::ball([-0.2, 0.2, 0.1], 0.2, 3.0)]).unwrap();
        let d = sphere_detectors(dim, 1.0, res).unwrap();
        let radial = RadialGrid::new(2.0, 128).unwrap();
        let s1 = forward_quadrature(&p1, &d, radial, 16).unwrap();
        let s2 = forward_quadrature(&p2, &d, radial, 16).unwrap();
        let s12 = forward_quadrature(&p1.union(&p2).unwrap(), &d, radial, 16).unwrap();
        check_sum(s1.values(), s2.values(), s12.values());
        let empty = forward_quadrature(&Phantom::empty(dim).unwrap(), &d, radial, 16).unwrap();
        zero_ok &= empty.values().iter().all(|&v| v == 0.0);

        let grid = ImageGrid::new(dim, 2, [0.0; 3], 0.6, 16).unwrap();
        let sum = add(&s1, &s2);
        for method in methods {
            let opts = ReconstructOptions {
                method,
                ..Default::default()
            };
            let r = |s: &Sinogram| reconstruct(s, &grid, &opts).unwrap();
            check_sum(r(&s1).values(), r(&s2).values(), r(&sum).values());
            zero_ok &= r(&Sinogram::zeros(d.clone(), radial)).values().iter().all(|&v| v == 0.0);
        }
    }

    // series on the unit square
    let domain = BoxDomain::unit(2).unwrap();
    let det = box_detectors(2, domain.extents(), 32).unwrap();
    let radial = RadialGrid::new(2.0, 256).unwrap();
    let p1 = Phantom::new(2, vec![bump([0.5, 0.45, 0.0], 0.3, 1.0)]).unwrap();
    let p2 = Phantom::new(2, vec![Component::box_mode([1.0, 1.0, 0.0], [2, 1, 0], 0.5)]).unwrap();
    let s1 = forward_quadrature(&p1, &det, radial, 16).unwrap();
    let s2 = forward_quadrature(&p2, &det, radial, 16).unwrap();
    let grid = ImageGrid::new(2, 2, [0.5, 0.5, 0.0], 0.45, 16).unwrap();
    let r = |s: &Sinogram| series_reconstruct(&series_coefficients(s, 24.0).unwrap(), &grid).unwrap();
    check_sum(r(&s1).values(), r(&s2).values(), r(&add(&s1, &s2)).values());
    zero_ok &= r(&Sinogram::zeros(det, radial)).values().iter().all(|&v| v == 0.0);

    (
        zero_ok && worst_sup <= 1e-10,
        format!("zero data gives exactly zero in every pipeline: {zero_ok}; worst superposition defect {worst_sup:.3e} (<= 1e-10)"),
    )
}

fn main() {
    let rows = default_suite(0).expect("identity suite");
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(|| criterion_5(&rows))),
        (6, Box::new(|| criterion_6(&rows))),
        (7, Box::new(|| criterion_7(&rows))),
        (8, Box::new(|| criterion_8(&rows))),
        (9, Box::new(criterion_9)),
        (10, Box::new(criterion_10)),
        (11, Box::new(criterion_11)),
    ];
    let mut failed = Vec::new();
    for (n, run) in &criteria {
        let start = Instant::now();
        let (pass, detail) = run();
        println!(
            "criterion {n:>2} {}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(*n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
