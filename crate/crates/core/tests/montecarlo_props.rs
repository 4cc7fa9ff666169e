mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use narrow_escape::fem::{self, FemParams, Locator};
use narrow_escape::geometry::{window_arc, Dimension};
use narrow_escape::montecarlo::{
    path_rng, richardson_sqrt_dt, run_ensemble, uniform_point, ExitDomain, QsdDensity, SimParams, StartMode,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stats_account_for_every_path(seed in any::<u64>(), max_time in 0.05..2.0f64, tc in 0.0..0.3f64) {
        let config = common::planar(&[(0.0, 0.2), (2.0, 0.1)]);
        let mut p = SimParams::new(1e-3, 300, seed);
        p.max_time = Some(max_time);
        p.decorrelation_time = tc;
        let ens = run_ensemble(&ExitDomain::from_config(&config), &p).unwrap();
        let s = &ens.stats;
        let used: usize = s.counts.iter().sum();
        prop_assert_eq!(used + s.censored + s.discarded, s.n_paths);
        if used > 0 {
            prop_assert!((s.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for ((lo, hi), p) in s.wilson.iter().zip(&s.probabilities) {
            if used > 0 {
                prop_assert!(lo <= p && p <= hi);
            }
        }
        prop_assert!((s.censored_fraction - s.censored as f64 / s.n_paths as f64).abs() < 1e-15);
    }

    #[test]
    fn exit_points_lie_on_their_window(seed in any::<u64>()) {
        let config = common::planar(&[(0.0, 0.1), (PI, 0.05)]);
        let p = SimParams::new(1e-4, 100, seed);
        let ens = run_ensemble(&ExitDomain::from_config(&config), &p).unwrap();
        let tol = 4.0 * p.dt.sqrt();
        for s in ens.samples.iter().filter(|s| !s.censored) {
            let k = s.window.unwrap();
            let arc = window_arc(&config.windows()[k]);
            let theta = s.exit_angle(2);
            let d = (theta - arc.center + PI).rem_euclid(2.0 * PI) - PI;
            prop_assert!(d.abs() <= arc.half_width + tol);
            let r = s.exit_point[0].hypot(s.exit_point[1]);
            prop_assert!((r - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let config = common::planar(&[(0.0, 0.1), (PI, 0.1)]);
    let domain = ExitDomain::from_config(&config);
    let p = SimParams::new(1e-4, 400, 7);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&domain, &p).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn default_horizon_makes_censoring_negligible() {
    let config = common::planar(&[(0.0, 0.1)]);
    let p = SimParams::new(1e-4, 2000, 11);
    let ens = run_ensemble(&ExitDomain::from_config(&config), &p).unwrap();
    assert!(ens.stats.censored_fraction < 1e-3);
}

#[test]
fn uniform_ball_samples_are_centered() {
    let mut rng = path_rng(3, 0);
    let n = 20_000;
    let pts: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(3, &mut rng)).collect();
    // Each coordinate of the uniform ball has variance 1/5.
    let sigma = (0.2 / n as f64).sqrt();
    for i in 0..3 {
        let mean = pts.iter().map(|p| p[i]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * sigma, "{mean}");
    }
    assert!(pts.iter().all(|p| p.iter().map(|v| v * v).sum::<f64>() < 1.0));
}

#[test]
fn qsd_start_follows_the_ground_state() {
    let config = common::planar(&[(0.0, 0.1)]);
    let sol = fem::solve(&config, &FemParams::default(), narrow_escape::fem::BoundaryMode::Mixed).unwrap();
    let u = sol.eigen.u0();
    let density = QsdDensity::new(&sol.mesh, u).unwrap();
    assert!(density.acceptance_rate() >= 0.8, "{}", density.acceptance_rate());

    // Mass of the triangles with centroid in the left half plane.
    let mesh = &sol.mesh;
    let mass = |t: usize| mesh.triangle_area(t) * mesh.triangles[t].iter().map(|&i| u[i].abs()).sum::<f64>() / 3.0;
    let left = |t: usize| mesh.triangles[t].iter().map(|&i| mesh.vertices[i][0]).sum::<f64>() < 0.0;
    let total: f64 = (0..mesh.triangles.len()).map(mass).sum();
    let expected: f64 = (0..mesh.triangles.len()).filter(|&t| left(t)).map(mass).sum::<f64>() / total;

    let locator = Locator::new(mesh);
    let mut rng = path_rng(5, 0);
    let n = 20_000;
    let hits = (0..n).filter(|_| left(locator.locate(density.sample(&mut rng)).0)).count();
    let p = hits as f64 / n as f64;
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((p - expected).abs() < 3.0 * sigma, "{p} vs {expected}");

    let mut params = SimParams::new(1e-4, 200, 1);
    params.start = StartMode::QsdFem(Arc::new(density));
    let ens = run_ensemble(&ExitDomain::from_config(&config), &params).unwrap();
    assert_eq!(ens.stats.counts.iter().sum::<usize>(), 200);
}

#[test]
fn qsd_start_is_planar_only() {
    let config = common::planar(&[(0.0, 0.1)]);
    let sol = fem::solve(&config, &FemParams::default(), narrow_escape::fem::BoundaryMode::Mixed).unwrap();
    let mut params = SimParams::new(1e-4, 10, 1);
    params.start = StartMode::QsdFem(Arc::new(QsdDensity::new(&sol.mesh, sol.eigen.u0()).unwrap()));
    assert!(run_ensemble(&ExitDomain::all_absorbing(Dimension::Three), &params).is_err());
}

#[test]
fn power_scaled_split_matches_the_fluxes() {
    let (a, eps) = ([1.0, 2.0], 0.05f64);
    let config = common::planar(&[(0.0, eps.powf(a[0])), (PI, eps.powf(a[1]))]);
    let sol = fem::solve(&config, &FemParams::default(), narrow_escape::fem::BoundaryMode::Mixed).unwrap();
    let fem_ratio = sol.exit_probabilities()[0];
    // The split carries an O(√dt) bias from the small window; extrapolate it away.
    let split = |dt: f64| {
        let mut p = SimParams::new(dt, 20_000, 2024);
        p.decorrelation_time = 0.5;
        let ens = run_ensemble(&ExitDomain::from_config(&config), &p).unwrap();
        (ens.stats.probabilities[0], ens.stats.counts.iter().sum::<usize>())
    };
    let ((coarse, n1), (fine, n2)) = (split(4e-6), split(1e-6));
    let mc = richardson_sqrt_dt(coarse, fine, 4.0);
    let var = fem_ratio * (1.0 - fem_ratio);
    let sigma = (4.0 * var / n2 as f64 + var / n1 as f64).sqrt();
    assert!((mc - fem_ratio).abs() < 3.0 * sigma, "mc {mc} fem {fem_ratio} sigma {sigma}");
    assert!(fine < coarse, "the bias shrinks toward the flux ratio");
    assert!(fem_ratio > 0.5 && fem_ratio < 2.0 / 3.0);
}
