#![allow(dead_code)]

use narrow_escape::geometry::{validate_config, Dimension, DomainConfig, WindowSpec};

/// Bessel function of the first kind by its power series; accurate for `x < 10`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for m in 1..80 {
        let m = f64::from(m);
        term *= -half * half / (m * (m + f64::from(n)));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        (bessel_j(n - 1, x) - bessel_j(n + 1, x)) / 2.0
    }
}

pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First zero of `J_0`.
pub fn j01() -> f64 {
    bisect(2.0, 3.0, |x| bessel_j(0, x))
}

/// First zero of `J_1`.
pub fn j11() -> f64 {
    bisect(3.5, 4.5, |x| bessel_j(1, x))
}

/// First zero of `J_1'`.
pub fn j11_prime() -> f64 {
    bisect(1.5, 2.2, |x| bessel_j_prime(1, x))
}

pub fn planar(windows: &[(f64, f64)]) -> DomainConfig<f64> {
    validate_config(
        Dimension::Two,
        windows
            .iter()
            .map(|&(a, e)| WindowSpec::planar_with_radius(a, e).unwrap())
            .collect(),
        false,
    )
    .unwrap()
}
