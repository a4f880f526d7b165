use std::f64::consts::PI;

use smrt_core::forward::{forward_quadrature, RadialGrid, Sinogram};
use smrt_core::geometry::{sphere_detectors, Component, DetectorSet, ImageGrid, Phantom};
use smrt_core::invert_closed::{
    backproject_div, bracket_limit_2d, calibrate, calibrate_values, filter_2d, filter_3d,
    filter_nd, filter_sinogram, moment_j, moment_n, reconstruct, t_grid_for, Backprojection,
    FilterTable, FilteredRow, Method, ReconstructOptions, SpectralFilter, SpectralGrid, TGrid,
    DEFAULT_CALIBRATION,
};
use smrt_core::specfun::{bessel_j, bessel_n};
use smrt_core::Error;

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    (d / n).sqrt()
}

fn bump2(c: [f64; 2], rho: f64, a: f64) -> Component {
    Component::bump([c[0], c[1], 0.0], rho, a)
}

fn setup_2d(detectors: usize, nr: usize) -> (Phantom, DetectorSet, Sinogram) {
    let p = Phantom::new(2, vec![bump2([0.2, 0.1], 0.4, 1.0)]).unwrap();
    let d = sphere_detectors(2, 1.0, [detectors, 1]).unwrap();
    let s = forward_quadrature(&p, &d, RadialGrid::new(2.0, nr).unwrap(), 24).unwrap();
    (p, d, s)
}

#[test]
fn moments_of_simple_rows() {
    let radial = RadialGrid::new(1.0, 4001).unwrap();
    let zero = vec![0.0; radial.len()];
    assert_eq!(moment_j(&zero, &radial, 2, 3.0).unwrap(), 0.0);
    assert_eq!(moment_n(&zero, &radial, 2, 3.0).unwrap(), 0.0);
    assert!(moment_n(&zero, &radial, 2, 0.0).is_err());

    let row: Vec<f64> = radial.radii().collect();
    let m = moment_j(&row, &radial, 3, PI).unwrap();
    let want = (2.0 / PI).sqrt() * 2.0 / (PI * PI);
    assert!((m - want).abs() < 1e-6, "{m} vs {want}");
}

#[test]
fn disk_row_moment_converges_under_refinement() {
    let p = Phantom::new(2, vec![Component::ball([0.1, 0.0, 0.0], 0.4, 1.0)]).unwrap();
    let d = sphere_detectors(2, 1.0, [4, 1]).unwrap();
    let coarse = forward_quadrature(&p, &d, RadialGrid::new(2.0, 512).unwrap(), 8).unwrap();
    let fine = forward_quadrature(&p, &d, RadialGrid::new(2.0, 5111).unwrap(), 8).unwrap();
    for i in 0..d.len() {
        for (dim, lambda) in [(2, 5.0), (3, 5.0)] {
            let a = moment_j(coarse.row(i), coarse.radial(), dim, lambda).unwrap();
            let b = moment_j(fine.row(i), fine.radial(), dim, lambda).unwrap();
            // square-root edges of the disk projection limit the trapezoid
            // rule to O(Δr^{3/2}); measured worst case 3.6e-5
            assert!((a - b).abs() < 5e-5, "J moment {dim}-D row {i}: {a} vs {b}");
        }
    }
    let bump = Phantom::new(2, vec![bump2([0.1, 0.0], 0.4, 1.0)]).unwrap();
    let coarse = forward_quadrature(&bump, &d, RadialGrid::new(2.0, 512).unwrap(), 24).unwrap();
    let fine = forward_quadrature(&bump, &d, RadialGrid::new(2.0, 5111).unwrap(), 24).unwrap();
    for i in 0..d.len() {
        let a = moment_n(coarse.row(i), coarse.radial(), 2, 5.0).unwrap();
        let b = moment_n(fine.row(i), fine.radial(), 2, 5.0).unwrap();
        assert!((a - b).abs() < 1e-6, "N moment row {i}: {a} vs {b}");
    }
}

#[test]
fn bracket_has_a_finite_limit_at_zero_lambda() {
    let (_, _, s) = setup_2d(4, 512);
    let row = s.row(1);
    let t = 0.9;
    let limit = bracket_limit_2d(row, s.radial(), t).unwrap();
    let bracket = |lam: f64| {
        bessel_n(0.0, lam * t).unwrap() * moment_j(row, s.radial(), 2, lam).unwrap()
            - bessel_j(0.0, lam * t).unwrap() * moment_n(row, s.radial(), 2, lam).unwrap()
    };
    let (b1, b2) = (bracket(1e-4), bracket(5e-5));
    assert!((b1 - limit).abs() <= 1e-6 * limit.abs());
    assert!((b1 - b2).abs() <= 1e-6 * limit.abs());

    // data concentrated at r = t: ln t − ln r cancels
    let mut spike = vec![0.0; s.radial().len()];
    spike[200] = 1.0;
    let at = s.radial().r(200);
    assert!(bracket_limit_2d(&spike, s.radial(), at).unwrap().abs() < 1e-15);
}

#[test]
fn spectral_filters_agree_across_paths_and_resolutions() {
    let (_, _, s) = setup_2d(8, 256);
    let radial = *s.radial();
    let grid = ImageGrid::centered(2, 0.63, 32).unwrap();
    let tg = t_grid_for(radial, 1.0, &grid, 0.0).unwrap();
    let sg = SpectralGrid::for_radial(&radial, None, None).unwrap();
    let dense = SpectralGrid::for_radial(&radial, None, Some(4 * sg.len())).unwrap();
    let filter = SpectralFilter::new(2, tg.clone(), sg).unwrap();

    let zero = filter_2d(&vec![0.0; radial.len()], &tg, sg).unwrap();
    assert!(zero.h.iter().chain(&zero.ht).all(|&v| v == 0.0));

    for i in 0..s.detectors().len() {
        let a = filter_2d(s.row(i), &tg, sg).unwrap();
        let b = filter_nd(s.row(i), &tg, sg, 2).unwrap();
        assert_eq!(a, b);
        let c = filter_2d(s.row(i), &tg, dense).unwrap();
        assert!(rel_l2(&a.h, &c.h) < 1e-3);
        let hk = filter.apply_hankel(s.row(i)).unwrap();
        let scale = a.h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.h.iter().zip(&hk) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn spectral_derivative_matches_finite_difference() {
    let (_, _, s) = setup_2d(4, 256);
    let radial = *s.radial();
    let tg = TGrid::new(radial, 20..236).unwrap();
    let sg = SpectralGrid::for_radial(&radial, None, None).unwrap();
    let f = filter_2d(s.row(2), &tg, sg).unwrap();
    let dt = radial.step();
    let scale = f.ht.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for m in 1..tg.len() - 1 {
        let fd = (f.h[m + 1] - f.h[m - 1]) / (2.0 * dt);
        assert!((fd - f.ht[m]).abs() < 2e-2 * scale, "m {m}: {fd} vs {}", f.ht[m]);
    }
}

#[test]
fn three_dimensional_filter_on_polynomial_rows() {
    let radial = RadialGrid::new(2.0, 201).unwrap();
    let tg = TGrid::new(radial, 2..201).unwrap();
    let sq: Vec<f64> = radial.radii().map(|r| r * r).collect();
    let f = filter_3d(&sq, &tg).unwrap();
    for m in 0..tg.len() {
        let t = tg.t(m);
        assert!((f.h[m] + 2.0 / t).abs() < 1e-10 / t);
        assert!((f.ht[m] - 2.0 / (t * t)).abs() < 1e-8 / (t * t));
    }
    let lin: Vec<f64> = radial.radii().collect();
    let f = filter_3d(&lin, &tg).unwrap();
    assert!(f.h.iter().all(|&v| v.abs() < 1e-12));
    assert!(filter_3d(&lin, &TGrid::new(radial, 1..20).unwrap()).is_err());
}

#[test]
fn three_dimensional_filter_converges_at_second_order() {
    let p = Phantom::new(3, vec![Component::bump([0.2, 0.1, 0.0], 0.4, 1.0)]).unwrap();
    let d = sphere_detectors(3, 1.0, [4, 4]).unwrap();
    let levels: Vec<Sinogram> = [129, 257, 513]
        .iter()
        .map(|&nr| forward_quadrature(&p, &d, RadialGrid::new(2.0, nr).unwrap(), 24).unwrap())
        .collect();
    // evaluate at the coarse radii t = k/64, k = 16..=112
    let at = |s: &Sinogram, k: usize, stride: usize| {
        let tg = TGrid::new(*s.radial(), 2..s.radial().len() - 1).unwrap();
        filter_3d(s.row(5), &tg).unwrap().h[k * stride - 2]
    };
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for k in 16..=112 {
        let (a, b, c) = (at(&levels[0], k, 1), at(&levels[1], k, 2), at(&levels[2], k, 4));
        e1 = e1.max((a - b).abs());
        e2 = e2.max((b - c).abs());
    }
    assert!(e1 / e2 > 3.0, "ratio {}", e1 / e2);

    // uniform ball: g/t is quadratic in t between the kinks, so the central
    // difference there is exact
    let ball = Phantom::new(3, vec![Component::ball([0.0, 0.0, 0.3], 0.4, 1.0)]).unwrap();
    let coarse = forward_quadrature(&ball, &d, RadialGrid::new(2.0, 201).unwrap(), 8).unwrap();
    let fine = forward_quadrature(&ball, &d, RadialGrid::new(2.0, 401).unwrap(), 8).unwrap();
    let z = d.points()[0];
    let dist = ((z[0]).powi(2) + z[1].powi(2) + (z[2] - 0.3).powi(2)).sqrt();
    let tg_c = TGrid::new(*coarse.radial(), 2..200).unwrap();
    let tg_f = TGrid::new(*fine.radial(), 2..400).unwrap();
    let hc = filter_3d(coarse.row(0), &tg_c).unwrap();
    let hf = filter_3d(fine.row(0), &tg_f).unwrap();
    for m in 0..tg_c.len() {
        let t = tg_c.t(m);
        if t > dist - 0.4 + 0.03 && t < dist + 0.4 - 0.03 {
            assert!((hc.h[m] - hf.h[2 * m + 2]).abs() < 1e-10);
        }
    }
}

#[test]
fn nd_filter_matches_3d_filter() {
    let p = Phantom::new(3, vec![Component::bump([0.2, 0.1, 0.0], 0.4, 1.0)]).unwrap();
    let d = sphere_detectors(3, 1.0, [4, 4]).unwrap();
    let radial = RadialGrid::new(2.0, 256).unwrap();
    let s = forward_quadrature(&p, &d, radial, 24).unwrap();
    let grid = ImageGrid::new(3, 2, [0.0; 3], 0.63, 16).unwrap();
    let tg = t_grid_for(radial, 1.0, &grid, 0.0).unwrap();
    let sg = SpectralGrid::for_radial(&radial, None, None).unwrap();
    let f = SpectralFilter::new(3, tg.clone(), sg).unwrap();
    for i in 0..d.len() {
        let a = f.apply(s.row(i)).unwrap();
        let b = filter_3d(s.row(i), &tg).unwrap();
        assert!(rel_l2(&a.h, &b.h) < 3e-2);
    }
}

#[test]
fn backprojection_of_zero_is_zero_and_range_is_enforced() {
    let d = sphere_detectors(2, 1.0, [16, 1]).unwrap();
    let radial = RadialGrid::new(2.0, 128).unwrap();
    let grid = ImageGrid::centered(2, 0.5, 8).unwrap();
    let tg = t_grid_for(radial, 1.0, &grid, grid.spacing()).unwrap();
    let zero = FilteredRow {
        h: vec![0.0; tg.len()],
        ht: vec![0.0; tg.len()],
    };
    let table = FilterTable::new(d.clone(), tg, vec![zero.clone(); d.len()]).unwrap();
    for mode in [Backprojection::AnalyticGradient, Backprojection::GridDivergence] {
        let img = backproject_div(&table, &grid, mode).unwrap();
        assert!(img.values().iter().all(|&v| v == 0.0));
    }
    let narrow = TGrid::new(radial, 40..60).unwrap();
    let zero = FilteredRow {
        h: vec![0.0; 20],
        ht: vec![0.0; 20],
    };
    let table = FilterTable::new(d.clone(), narrow, vec![zero; d.len()]).unwrap();
    let err = backproject_div(&table, &grid, Backprojection::AnalyticGradient).unwrap_err();
    assert!(matches!(err, Error::OutsideFilterRange { .. }));
}

#[test]
fn backprojection_modes_agree() {
    let (_, _, s) = setup_2d(128, 256);
    let grid = ImageGrid::centered(2, 0.63, 64).unwrap();
    let run = |mode| {
        reconstruct(
            &s,
            &grid,
            &ReconstructOptions {
                backprojection: mode,
                ..Default::default()
            },
        )
        .unwrap()
    };
    let a = run(Backprojection::AnalyticGradient);
    let b = run(Backprojection::GridDivergence);
    assert!(rel_l2(a.values(), b.values()) < 2e-2);
}

#[test]
fn round_trips_with_the_default_calibration() {
    let (p, _, s) = setup_2d(128, 256);
    let grid = ImageGrid::centered(2, 0.63, 48).unwrap();
    let truth = grid.clone().sample(|x| p.eval(x));
    let img = reconstruct(&s, &grid, &ReconstructOptions::default()).unwrap();
    assert!(rel_l2(img.values(), truth.values()) < 0.1);
    let nd = reconstruct(
        &s,
        &grid,
        &ReconstructOptions {
            method: Method::FbpNd,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(nd.values(), img.values());

    let p3 = Phantom::new(3, vec![Component::bump([0.1, -0.1, 0.05], 0.4, 1.0)]).unwrap();
    let d3 = sphere_detectors(3, 1.0, [16, 32]).unwrap();
    let s3 = forward_quadrature(&p3, &d3, RadialGrid::new(2.0, 256).unwrap(), 24).unwrap();
    let slice = ImageGrid::new(3, 2, [0.0, 0.0, 0.05], 0.6, 32).unwrap();
    let img = reconstruct(&s3, &slice, &ReconstructOptions::default()).unwrap();
    let truth = slice.clone().sample(|x| p3.eval(x));
    assert!(rel_l2(img.values(), truth.values()) < 0.1);
}

#[test]
fn reconstruction_is_linear_and_maps_zero_to_zero() {
    let (_, d, s1) = setup_2d(64, 128);
    let p2 = Phantom::new(2, vec![Component::ball([-0.2, 0.2, 0.0], 0.2, 3.0)]).unwrap();
    let s2 = forward_quadrature(&p2, &d, *s1.radial(), 16).unwrap();
    let sum: Vec<f64> = s1.values().iter().zip(s2.values()).map(|(a, b)| a + b).collect();
    let s12 = s1.with_values(sum).unwrap();
    let grid = ImageGrid::centered(2, 0.6, 24).unwrap();
    let opts = ReconstructOptions::default();
    let (r1, r2, r12) = (
        reconstruct(&s1, &grid, &opts).unwrap(),
        reconstruct(&s2, &grid, &opts).unwrap(),
        reconstruct(&s12, &grid, &opts).unwrap(),
    );
    let scale = r12.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((a, b), c) in r1.values().iter().zip(r2.values()).zip(r12.values()) {
        assert!((a + b - c).abs() <= 1e-10 * scale);
    }
    let zero = Sinogram::zeros(d, *s1.radial());
    let img = reconstruct(&zero, &grid, &opts).unwrap();
    assert!(img.values().iter().all(|&v| v == 0.0));
}

#[test]
fn reconstruction_rotates_with_the_phantom() {
    let n = 64;
    let d = sphere_detectors(2, 1.0, [n, 1]).unwrap();
    let radial = RadialGrid::new(2.0, 128).unwrap();
    let c = [0.25, 0.1];
    let p = Phantom::new(2, vec![bump2(c, 0.3, 1.0)]).unwrap();
    let q = Phantom::new(2, vec![bump2([-c[1], c[0]], 0.3, 1.0)]).unwrap();
    let grid = ImageGrid::centered(2, 0.6, 21).unwrap();
    let opts = ReconstructOptions::default();
    let a = reconstruct(&forward_quadrature(&p, &d, radial, 24).unwrap(), &grid, &opts).unwrap();
    let b = reconstruct(&forward_quadrature(&q, &d, radial, 24).unwrap(), &grid, &opts).unwrap();
    let m = grid.points_per_axis();
    let scale = a.values().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for row in 0..m {
        for col in 0..m {
            // rotation by π/2 sends (x, y) to (−y, x)
            let (rrow, rcol) = (col, m - 1 - row);
            let (va, vb) = (a.values()[row * m + col], b.values()[rrow * m + rcol]);
            assert!((va - vb).abs() <= 1e-9 * scale, "{row},{col}");
        }
    }
}

#[test]
fn calibration_examples() {
    let truth = [1.0, 2.0, -0.5, 0.0];
    assert_eq!(calibrate_values(&truth, &truth).unwrap(), 1.0);
    let doubled: Vec<f64> = truth.iter().map(|v| 2.0 * v).collect();
    assert_eq!(calibrate_values(&truth, &doubled).unwrap(), 0.5);
    assert!(matches!(calibrate_values(&truth, &[0.0; 4]), Err(Error::Degenerate(_))));
    assert!(calibrate_values(&truth, &[1.0]).is_err());

    let p = Phantom::new(2, vec![bump2([0.0, 0.0], 0.3, 2.0)]).unwrap();
    let grid = ImageGrid::centered(2, 0.5, 9).unwrap().sample(|x| -0.5 * p.eval(x));
    assert!((calibrate(&p, &grid).unwrap() + 2.0).abs() < 1e-14);
}

#[test]
fn calibration_is_phantom_independent() {
    let d = sphere_detectors(2, 1.0, [128, 1]).unwrap();
    let radial = RadialGrid::new(2.0, 256).unwrap();
    let grid = ImageGrid::centered(2, 0.63, 48).unwrap();
    let opts = ReconstructOptions {
        calibration: 1.0,
        ..Default::default()
    };
    let alphas: Vec<f64> = [
        vec![bump2([0.2, 0.1], 0.4, 1.0)],
        vec![bump2([0.3, -0.2], 0.25, 1.0), bump2([-0.25, 0.2], 0.3, 0.7)],
    ]
    .into_iter()
    .map(|c| {
        let p = Phantom::new(2, c).unwrap();
        let s = forward_quadrature(&p, &d, radial, 24).unwrap();
        calibrate(&p, &reconstruct(&s, &grid, &opts).unwrap()).unwrap()
    })
    .collect();
    for a in &alphas {
        assert!((a - DEFAULT_CALIBRATION).abs() < 1e-2 * DEFAULT_CALIBRATION.abs(), "{alphas:?}");
    }
}

#[test]
fn filter_table_rejects_unsupported_setups() {
    let (_, _, s) = setup_2d(8, 64);
    let grid = ImageGrid::centered(2, 0.5, 8).unwrap();
    let tg = t_grid_for(*s.radial(), 1.0, &grid, 0.0).unwrap();
    assert!(filter_sinogram(&s, &tg, Method::Fbp3d, None).is_err());
    let outside = ImageGrid::centered(2, 0.8, 8).unwrap();
    assert!(reconstruct(&s, &outside, &ReconstructOptions::default()).is_err());
}
