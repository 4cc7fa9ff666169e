//! Closed-form approximate principal eigenfunction.
//!
//! In the disk, `f_k(x) = ln|x - x_k| + (1 - |x|²)/4` and
//! `φ = -(1/√π)(1 + Σ K_k f_k)`. In the ball `f_k` is the Neumann Green's
//! function with a boundary pole and `√π` becomes `√|B|`, `|B| = 4π/3`.
//! Each `f_k` satisfies `Δf_k = -1` and `∂_n f_k = 0` away from `x_k`.

use thiserror::Error;

use crate::geometry::{Dimension, DomainConfig};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuasimodeError {
    #[error("point coincides with the center of window {0}")]
    SingularPoint(usize),
    #[error("point lies outside the closed domain (|x| = {0})")]
    OutsideDomain(f64),
    #[error("point has {got} coordinates, domain has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadrature dropped {0:.3} of its weight inside the level sets")]
    Quadrature(f64),
    #[error("operation requires a planar domain")]
    NotPlanar,
}

#[derive(Debug, Clone)]
pub struct Quasimode<T> {
    config: DomainConfig<T>,
    centers: Vec<Vec<T>>,
    volume: T,
}

impl<T: Scalar> Quasimode<T> {
    pub fn new(config: DomainConfig<T>) -> Self {
        let centers = config.windows().iter().map(|w| w.point()).collect();
        let volume = match config.dimension() {
            Dimension::Two => T::PI(),
            Dimension::Three => T::lit(4.0) * T::PI() / T::lit(3.0),
        };
        Self {
            config,
            centers,
            volume,
        }
    }

    pub fn config(&self) -> &DomainConfig<T> {
        &self.config
    }

    /// Lebesgue measure of the unit disk or ball.
    pub fn volume(&self) -> T {
        self.volume
    }

    /// `1/√|Ω|`, the value of the normalized Neumann ground state up to sign.
    pub fn plateau(&self) -> T {
        T::one() / self.volume.sqrt()
    }

    fn check(&self, x: &[T]) -> Result<(), QuasimodeError> {
        let d = self.config.dimension().as_usize();
        if x.len() != d {
            return Err(QuasimodeError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let r = dot(x, x).sqrt();
        if !(r <= T::one() + T::lit(1e-12).max(T::lit(8.0) * T::epsilon())) {
            return Err(QuasimodeError::OutsideDomain(r.to_f64_lossy()));
        }
        for (k, c) in self.centers.iter().enumerate() {
            if x.iter().zip(c).all(|(a, b)| a == b) {
                return Err(QuasimodeError::SingularPoint(k));
            }
        }
        Ok(())
    }

    fn window_center(&self, k: usize) -> &[T] {
        &self.centers[k]
    }

    fn f_raw(&self, k: usize, x: &[T]) -> T {
        let c = self.window_center(k);
        let y: Vec<T> = x.iter().zip(c).map(|(&a, &b)| a - b).collect();
        let r = dot(&y, &y).sqrt();
        let rr = dot(x, x);
        match self.config.dimension() {
            Dimension::Two => r.ln() + (T::one() - rr) / T::lit(4.0),
            Dimension::Three => {
                let pi = T::PI();
                let arg = T::one() - dot(x, c) + r;
                -self.volume
                    * (T::one() / (T::lit(2.0) * pi * r) + rr / (T::lit(8.0) * pi)
                        - arg.ln() / (T::lit(4.0) * pi))
            }
        }
    }

    fn grad_f_raw(&self, k: usize, x: &[T]) -> Vec<T> {
        let c = self.window_center(k);
        let y: Vec<T> = x.iter().zip(c).map(|(&a, &b)| a - b).collect();
        let r2 = dot(&y, &y);
        match self.config.dimension() {
            Dimension::Two => y
                .iter()
                .zip(x)
                .map(|(&yi, &xi)| yi / r2 - xi / T::lit(2.0))
                .collect(),
            Dimension::Three => {
                let pi = T::PI();
                let r = r2.sqrt();
                let arg = T::one() - dot(x, c) + r;
                (0..3)
                    .map(|i| {
                        let coulomb = -y[i] / (T::lit(2.0) * pi * r2 * r);
                        let quad = x[i] / (T::lit(4.0) * pi);
                        let log = (y[i] / r - c[i]) / (arg * T::lit(4.0) * pi);
                        -self.volume * (coulomb + quad - log)
                    })
                    .collect()
            }
        }
    }

    /// `f_k(x)`.
    pub fn f(&self, k: usize, x: &[T]) -> Result<T, QuasimodeError> {
        self.check(x)?;
        Ok(self.f_raw(k, x))
    }

    /// Analytic gradient of `f_k`.
    pub fn grad_f(&self, k: usize, x: &[T]) -> Result<Vec<T>, QuasimodeError> {
        self.check(x)?;
        Ok(self.grad_f_raw(k, x))
    }

    /// `Δf_k = -1` away from `x_k`, in both dimensions.
    pub fn laplacian_f(&self, _k: usize, x: &[T]) -> Result<T, QuasimodeError> {
        self.check(x)?;
        Ok(-T::one())
    }

    pub fn phi(&self, x: &[T]) -> Result<T, QuasimodeError> {
        self.check(x)?;
        Ok(self.phi_unchecked(x))
    }

    pub(crate) fn phi_unchecked(&self, x: &[T]) -> T {
        let s = self
            .config
            .windows()
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (k, w)| acc + w.k_eps() * self.f_raw(k, x));
        -self.plateau() * (T::one() + s)
    }

    pub fn grad_phi(&self, x: &[T]) -> Result<Vec<T>, QuasimodeError> {
        self.check(x)?;
        let mut g = vec![T::zero(); x.len()];
        for (k, w) in self.config.windows().iter().enumerate() {
            for (gi, di) in g.iter_mut().zip(self.grad_f_raw(k, x)) {
                *gi -= self.plateau() * w.k_eps() * di;
            }
        }
        Ok(g)
    }

    /// Constant `K̄/√|Ω|`.
    pub fn laplacian_phi(&self, x: &[T]) -> Result<T, QuasimodeError> {
        self.check(x)?;
        Ok(self.config.kbar() * self.plateau())
    }

    /// L² diagnostics of the quasimode over the rule's points with `φ < 0`.
    pub fn residual_norms(&self, rule: &QuadratureRule<T>) -> Result<ResidualNorms<T>, QuasimodeError> {
        if self.config.dimension() != Dimension::Two {
            return Err(QuasimodeError::NotPlanar);
        }
        let plateau = self.plateau();
        let kbar = self.config.kbar();
        let lap = kbar * plateau;
        let (mut gap, mut res, mut norm, mut area, mut dropped, mut total) =
            (T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for (p, w) in rule.points() {
            total += *w;
            if self.centers.iter().any(|c| c[0] == p[0] && c[1] == p[1]) {
                dropped += *w;
                continue;
            }
            let phi = self.phi_unchecked(p);
            if phi >= T::zero() {
                dropped += *w;
                continue;
            }
            area += *w;
            gap += *w * (phi + plateau) * (phi + plateau);
            res += *w * (lap + kbar * phi) * (lap + kbar * phi);
            norm += *w * phi * phi;
        }
        let dropped_fraction = dropped / total;
        if dropped_fraction > T::lit(0.05) {
            return Err(QuasimodeError::Quadrature(dropped_fraction.to_f64_lossy()));
        }
        Ok(ResidualNorms {
            constant_gap: gap.sqrt(),
            eigen_residual: res.sqrt(),
            phi_norm: norm.sqrt(),
            area,
            dropped_fraction,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms<T> {
    /// `‖φ + 1/√π‖`.
    pub constant_gap: T,
    /// `‖Δφ + K̄ φ‖`.
    pub eigen_residual: T,
    /// `‖φ‖`.
    pub phi_norm: T,
    /// Measure of the retained region.
    pub area: T,
    /// Weight fraction of points removed because `φ ≥ 0` there.
    pub dropped_fraction: T,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn composite_rule(breaks: &[f64], q: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(q);
    let mut out = Vec::with_capacity((breaks.len() - 1) * q);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        for (x, w) in xs.iter().zip(&ws) {
            out.push((a + half * (x + 1.0), half * w));
        }
    }
    out
}

/// Tensor polar quadrature on the unit disk: composite Gauss–Legendre in the
/// radius, graded toward the circle, times composite Gauss–Legendre in the
/// angle, graded toward every window center.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    points: Vec<([T; 2], T)>,
    order: usize,
}

impl<T: Scalar> QuadratureRule<T> {
    /// `panels` uniform panels per direction, `levels` dyadic grading levels,
    /// `q` Gauss points per panel.
    pub fn disk_polar(config: &DomainConfig<T>, panels: usize, levels: usize, q: usize) -> Self {
        assert!(panels >= 1 && q >= 1);
        let mut rb: Vec<f64> = (0..=panels).map(|i| 0.5 * i as f64 / panels as f64).collect();
        for j in 1..=levels {
            rb.push(1.0 - 0.5f64.powi(j as i32 + 1));
        }
        rb.push(1.0);
        rb.dedup();

        let tau = std::f64::consts::TAU;
        let base = tau / (2 * panels) as f64;
        let mut ab: Vec<f64> = (0..=2 * panels).map(|i| i as f64 * base).collect();
        for w in config.windows() {
            let Some(c) = w.center_angle() else { continue };
            let c = c.to_f64_lossy();
            ab.push(c);
            for j in 0..=levels {
                let off = base * 0.5f64.powi(j as i32);
                for a in [c - off, c + off] {
                    ab.push(a.rem_euclid(tau));
                }
            }
        }
        ab.sort_by(f64::total_cmp);
        ab.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        if ab.last().copied() != Some(tau) {
            ab.push(tau);
        }
        if ab[0] != 0.0 {
            ab.insert(0, 0.0);
        }

        let radial = composite_rule(&rb, q);
        let angular = composite_rule(&ab, q);
        let mut points = Vec::with_capacity(radial.len() * angular.len());
        for &(r, wr) in &radial {
            for &(a, wa) in &angular {
                points.push((
                    [T::lit(r * a.cos()), T::lit(r * a.sin())],
                    T::lit(r * wr * wa),
                ));
            }
        }
        Self {
            points,
            order: 2 * q - 1,
        }
    }

    /// Picks grading depth from the smallest inner level-set radius.
    pub fn for_config(config: &DomainConfig<T>) -> Self {
        let smallest = config
            .windows()
            .iter()
            .map(|w| (-1.5 / w.k_eps().to_f64_lossy()).exp())
            .fold(1.0f64, f64::min);
        let levels = ((1.0 / smallest).log2().ceil() as usize + 2).clamp(4, 48);
        Self::disk_polar(config, 16, levels, 6)
    }

    pub fn points(&self) -> &[([T; 2], T)] {
        &self.points
    }

    /// Polynomial exactness degree per panel and direction.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn total_weight(&self) -> T {
        self.points.iter().fold(T::zero(), |acc, (_, w)| acc + *w)
    }
}
