mod common;

use std::f64::consts::{PI, TAU};

use narrow_escape::geometry::{
    classify_boundary_point, levelset_radius, modified_boundary_polyline, validate_config, window_arc, BoundaryClass,
    Dimension, GeometryError, LevelSetBounds, WindowSpec,
};
use narrow_escape::quasimode::Quasimode;
use proptest::prelude::*;

/// Windows at evenly spread angles with a random offset and jitter, each with its own rate.
fn planar_windows(max_windows: usize, k_range: std::ops::Range<f64>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    (1..=max_windows)
        .prop_flat_map(move |n| {
            (
                0.0..TAU,
                prop::collection::vec(-0.2..0.2f64, n),
                prop::collection::vec(k_range.clone(), n),
            )
        })
        .prop_map(|(offset, jitter, ks)| {
            let n = ks.len() as f64;
            ks.iter()
                .enumerate()
                .map(|(i, &k)| (offset + TAU * (i as f64 + jitter[i]) / n, k))
                .collect()
        })
}

fn config(ws: &[(f64, f64)]) -> Option<narrow_escape::DomainConfig64> {
    let specs = ws.iter().map(|&(a, k)| WindowSpec::planar(a, k).unwrap()).collect();
    validate_config(Dimension::Two, specs, false).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chord_radius_inside_levelset_annulus(ws in planar_windows(5, 0.02..0.6)) {
        prop_assume!(config(&ws).is_some());
        let c = config(&ws).unwrap();
        let bounds = LevelSetBounds::default();
        for w in c.windows() {
            let (lo, hi) = bounds.radii(w.k_eps());
            prop_assert!(lo < w.chord_radius() && w.chord_radius() < hi);
            prop_assert!((w.chord_radius() - (-1.0 / w.k_eps()).exp()).abs() <= 1e-15);
        }
    }

    #[test]
    fn window_arcs_partition_the_circle(ws in planar_windows(6, 0.05..0.5), theta in 0.0..TAU) {
        prop_assume!(config(&ws).is_some());
        let c = config(&ws).unwrap();
        let containing: Vec<usize> = c
            .windows()
            .iter()
            .enumerate()
            .filter(|(_, w)| window_arc(w).contains(theta))
            .map(|(k, _)| k)
            .collect();
        prop_assert!(containing.len() <= 1);
        let expected = containing.first().map_or(BoundaryClass::Neumann, |&k| BoundaryClass::Window(k));
        prop_assert_eq!(classify_boundary_point(&c, theta), expected);
    }

    #[test]
    fn derived_fields(ws in planar_windows(5, 0.02..0.6)) {
        prop_assume!(config(&ws).is_some());
        let c = config(&ws).unwrap();
        let kbar: f64 = ws.iter().map(|w| w.1).sum();
        prop_assert!((c.kbar() - kbar).abs() <= 1e-14);
        prop_assert!(c.rho0() > 0.0 && c.rho0() <= 2.0);
        for w in c.windows() {
            prop_assert!(w.chord_radius() <= c.rho0() / 2.0);
        }
    }

    #[test]
    fn levelset_polyline_properties(ws in planar_windows(3, 0.08..0.15), n in 3usize..40) {
        prop_assume!(config(&ws).is_some());
        let c = config(&ws).unwrap();
        let bounds = LevelSetBounds::default();
        let qm = Quasimode::new(c.clone());
        for (k, w) in c.windows().iter().enumerate() {
            let (lo, hi) = bounds.radii(w.k_eps());
            let x = w.point();
            let curve = modified_boundary_polyline(&qm, &bounds, k, n).unwrap();
            prop_assert_eq!(curve.len(), n);
            let radii: Vec<f64> = curve.iter().map(|p| (p[0] - x[0]).hypot(p[1] - x[1])).collect();
            for (p, r) in curve.iter().zip(&radii) {
                prop_assert!(*r >= lo * (1.0 - 1e-9) && *r <= hi * (1.0 + 1e-9));
                prop_assert!(qm.phi(p).unwrap().abs() <= 1e-10);
            }
            // Continuity over the fan: the fan spans at most π.
            let spacing = PI / (n - 1) as f64;
            for pair in curve.windows(2) {
                let gap = (pair[1][0] - pair[0][0]).hypot(pair[1][1] - pair[0][1]);
                prop_assert!(gap < 10.0 * spacing * hi);
            }
            for p in [curve[0], curve[n - 1]] {
                prop_assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reflection_maps_levelsets_to_levelsets(ws in planar_windows(3, 0.08..0.15), n in 3usize..20) {
        prop_assume!(config(&ws).is_some());
        let mirrored: Vec<(f64, f64)> = ws.iter().map(|&(a, k)| (-a, k)).collect();
        let (c, m) = (config(&ws).unwrap(), config(&mirrored).unwrap());
        let bounds = LevelSetBounds::default();
        let (qc, qm) = (Quasimode::new(c), Quasimode::new(m));
        for k in 0..ws.len() {
            let a = modified_boundary_polyline(&qc, &bounds, k, n).unwrap();
            let b = modified_boundary_polyline(&qm, &bounds, k, n).unwrap();
            // The fan order reverses under reflection.
            for (p, q) in a.iter().zip(b.iter().rev()) {
                prop_assert!((p[0] - q[0]).abs() < 1e-10 && (p[1] + q[1]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn window_arc_half_width_examples() {
    let w = WindowSpec::planar_with_radius(0.0, 0.1).unwrap();
    let oracle = 2.0 * (0.05f64).asin();
    assert!((window_arc(&w).half_width - oracle).abs() < 1e-15);
    assert!((oracle - 0.100_041_7).abs() < 1e-7);
    let tiny = WindowSpec::planar_with_radius(0.0, 1e-6).unwrap();
    assert!((window_arc(&tiny).half_width - 1e-6f64).abs() < 1e-17);
}

#[test]
fn classification_examples() {
    let c = common::planar(&[(0.0, 0.1)]);
    assert_eq!(classify_boundary_point(&c, 0.05), BoundaryClass::Window(0));
    assert_eq!(classify_boundary_point(&c, PI), BoundaryClass::Neumann);
    let edge = window_arc(&c.windows()[0]).half_width;
    assert_eq!(classify_boundary_point(&c, edge), BoundaryClass::Window(0));
    assert_eq!(classify_boundary_point(&c, TAU - edge), BoundaryClass::Window(0));
}

#[test]
fn single_window_validation_example() {
    let c = common::planar(&[(0.0, 0.1)]);
    assert!((c.kbar() - 1.0 / 10f64.ln()).abs() < 1e-15);
    assert_eq!(c.rho0(), 2.0);
    let close = vec![
        WindowSpec::planar_with_radius(0.0, 0.1).unwrap(),
        WindowSpec::planar_with_radius(1e-9, 0.1).unwrap(),
    ];
    assert!(matches!(
        validate_config(Dimension::Two, close, false),
        Err(GeometryError::Overlap { .. } | GeometryError::DuplicateCenter(..))
    ));
}

#[test]
fn levelset_root_for_small_window() {
    let c = common::planar(&[(0.0, 1e-3)]);
    let k = c.kbar();
    let qm = Quasimode::new(c);
    let r = levelset_radius(&qm, &LevelSetBounds::default(), 0, [-1.0, 0.0]).unwrap();
    assert!(r >= (-1.5 / k).exp() && r <= (-0.4 / k).exp());
    // Bisection oracle on the same ray with an independent loop.
    let phi = |t: f64| qm.phi(&[1.0 - t, 0.0]).unwrap();
    let oracle = common::bisect((-1.5 / k).exp(), (-0.4 / k).exp(), phi);
    assert!((r - oracle).abs() < 1e-12);
}

#[test]
fn modified_boundary_meets_the_circle_at_a_right_angle() {
    for ws in [vec![(0.0, 0.1)], vec![(0.0, 0.1), (PI, 0.1)], vec![(1.0, 1e-3), (4.0, 0.05)]] {
        let c = common::planar(&ws);
        let qm = Quasimode::new(c.clone());
        for k in 0..ws.len() {
            let curve = modified_boundary_polyline(&qm, &LevelSetBounds::default(), k, 4001).unwrap();
            let n = curve.len();
            for (end, next) in [(curve[0], curve[1]), (curve[n - 1], curve[n - 2])] {
                let seg = [next[0] - end[0], next[1] - end[1]];
                let tangent = [-end[1], end[0]];
                let cos = (seg[0] * tangent[0] + seg[1] * tangent[1]).abs() / seg[0].hypot(seg[1]);
                assert!(cos < 1e-2, "{cos}");
            }
        }
    }
}
