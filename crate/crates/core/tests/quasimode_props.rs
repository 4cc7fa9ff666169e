mod common;

use std::f64::consts::{PI, TAU};

use narrow_escape::geometry::{validate_config, Dimension, LevelSetBounds, WindowSpec};
use narrow_escape::quasimode::{QuadratureRule, Quasimode};
use proptest::prelude::*;

fn two_windows() -> Quasimode<f64> {
    Quasimode::new(common::planar(&[(0.0, 0.1), (PI, 0.1)]))
}

fn ball() -> Quasimode<f64> {
    let ws = vec![
        WindowSpec::spatial([0.0, 0.0, 1.0], 0.05).unwrap(),
        WindowSpec::spatial([0.0, 0.0, -1.0], 0.05).unwrap(),
    ];
    Quasimode::new(validate_config(Dimension::Three, ws, false).unwrap())
}

fn five_point_laplacian(qm: &Quasimode<f64>, x: [f64; 2], h: f64) -> f64 {
    let f = |dx: f64, dy: f64| qm.phi(&[x[0] + dx, x[1] + dy]).unwrap();
    (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn neumann_on_the_reflecting_arc(theta in 0.2..(PI - 0.2)) {
        let qm = two_windows();
        for a in [theta, theta + PI] {
            let x = [a.cos(), a.sin()];
            let g = qm.grad_phi(&x).unwrap();
            prop_assert!((g[0] * x[0] + g[1] * x[1]).abs() <= 1e-10);
        }
    }

    #[test]
    fn laplacian_is_constant(r in 0.0..0.9f64, a in 0.0..TAU) {
        let qm = two_windows();
        let x = [r * a.cos(), r * a.sin()];
        let exact = qm.config().kbar() / PI.sqrt();
        prop_assert!((qm.laplacian_phi(&x).unwrap() - exact).abs() <= 1e-12);
        prop_assert!((five_point_laplacian(&qm, x, 1e-4) - exact).abs() <= 1e-4);
    }

    #[test]
    fn planar_gradient_matches_differences(r in 0.0..0.9f64, a in 0.0..TAU) {
        let qm = two_windows();
        let x = [r * a.cos(), r * a.sin()];
        let g = qm.grad_phi(&x).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut p = x;
            let mut m = x;
            p[i] += h;
            m[i] -= h;
            let fd = (qm.phi(&p).unwrap() - qm.phi(&m).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
        }
    }

    #[test]
    fn spatial_gradient_and_laplacian(r in 0.0..0.85f64, t in 0.3..(PI - 0.3), a in 0.0..TAU) {
        let qm = ball();
        let x = [r * t.sin() * a.cos(), r * t.sin() * a.sin(), r * t.cos()];
        let h = 1e-5;
        for k in 0..2 {
            let g = qm.grad_f(k, &x).unwrap();
            let mut lap = -2.0 * 3.0 * qm.f(k, &x).unwrap();
            for i in 0..3 {
                let mut p = x;
                let mut m = x;
                p[i] += h;
                m[i] -= h;
                let (fp, fm) = (qm.f(k, &p).unwrap(), qm.f(k, &m).unwrap());
                prop_assert!(((fp - fm) / (2.0 * h) - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
                lap += fp + fm;
            }
            // Δf_k = -|Ω|·(1/|Ω|) = -1 away from the pole.
            prop_assert!((lap / (h * h) + 1.0).abs() <= 1e-3);
        }
    }

    #[test]
    fn sign_structure(a in 0.0..TAU, s in 0.0..1.0f64) {
        let c = common::planar(&[(0.0, 0.01), (2.0, 0.01)]);
        let bounds = LevelSetBounds::default();
        let r_plus = c.windows().iter().map(|w| bounds.radii(w.k_eps()).1).fold(0.0, f64::max);
        let qm = Quasimode::new(c.clone());
        let r = s * (1.0 - r_plus);
        prop_assert!(qm.phi(&[r * a.cos(), r * a.sin()]).unwrap() < 0.0);
        for w in c.windows() {
            let x = w.point();
            let d = bounds.radii(w.k_eps()).0 / 2.0;
            // A point at distance r_minus/2 along a direction within 1.2 rad of the inward normal.
            let beta = (a / TAU - 0.5) * 2.4;
            let (sb, cb) = beta.sin_cos();
            let dir = [-x[0] * cb + x[1] * sb, -x[1] * cb - x[0] * sb];
            let p = [x[0] + d * dir[0], x[1] + d * dir[1]];
            prop_assume!(p[0].hypot(p[1]) < 1.0);
            prop_assert!(qm.phi(&p).unwrap() > 0.0);
        }
    }
}

#[test]
fn closed_form_values() {
    let one = Quasimode::new(common::planar(&[(0.0, 0.1)]));
    assert!((one.f(0, &[0.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
    let oracle = 0.5f64.ln() + 0.75 / 4.0;
    assert!((one.f(0, &[0.5, 0.0]).unwrap() - oracle).abs() < 1e-15);
    assert!((oracle + 0.505_647).abs() < 1e-6);
    let g = one.grad_f(0, &[0.5, 0.0]).unwrap();
    assert!((g[0] + 2.25).abs() < 1e-14 && g[1].abs() < 1e-15);
    let k = 1.0 / 10f64.ln();
    let phi0 = -(1.0 + k * 0.25) / PI.sqrt();
    assert!((one.phi(&[0.0, 0.0]).unwrap() - phi0).abs() < 1e-15);
    assert!((phi0 + 0.625_45).abs() < 1e-5);
    assert!((one.laplacian_phi(&[0.3, 0.1]).unwrap() - 0.245_02).abs() < 1e-5);

    let b = ball();
    let oracle = -2.0 / 3.0 + 2f64.ln() / 3.0;
    assert!((b.f(0, &[0.0, 0.0, 0.0]).unwrap() - oracle).abs() < 1e-15);
}

#[test]
fn quasimode_tends_to_the_plateau() {
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-8, 1e-16, 1e-64] {
        let qm = Quasimode::new(common::planar(&[(0.0, eps)]));
        let gap = (qm.phi(&[0.2, -0.3]).unwrap() + 1.0 / PI.sqrt()).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 1e-2);
}

#[test]
fn phi_norm_approaches_one() {
    let mut fitted = Vec::new();
    for eps in [1e-2, 1e-4, 1e-6] {
        let c = common::planar(&[(0.0, eps)]);
        let kbar = c.kbar();
        let rule = QuadratureRule::for_config(&c);
        let n = Quasimode::new(c).residual_norms(&rule).unwrap();
        fitted.push((n.phi_norm - 1.0).abs() / kbar);
    }
    let (lo, hi) = fitted.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi < 1.0 && hi / lo < 3.0, "{fitted:?}");
}
