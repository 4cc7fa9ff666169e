//! Quantities extracted from a converged eigenpair: window fluxes, traces along
//! horizontal cuts, L² distances to closed-form functions and the Rayleigh
//! quotient of the interpolated quasimode.

use std::collections::HashMap;

use crate::geometry::BoundaryClass;
use crate::quasimode::Quasimode;

use super::assemble::SparseSystem;
use super::mesh::{signed_area, Mesh};

/// `χ_kᵀ (K u − λ M u)` with the unconstrained matrices.
pub fn window_flux(system: &SparseSystem, mesh: &Mesh, lambda: f64, u: &[f64], k: usize) -> f64 {
    let r = residual_vector(system, lambda, u);
    mesh.vertices_with_tag(BoundaryClass::Window(k)).iter().map(|&i| r[i]).sum()
}

fn residual_vector(system: &SparseSystem, lambda: f64, u: &[f64]) -> Vec<f64> {
    let ku = system.stiffness.mul_vec(u);
    let mu = system.mass.mul_vec(u);
    ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect()
}

/// Per-window fluxes and their sum over the union of window dofs.
pub fn all_window_fluxes(
    system: &SparseSystem,
    mesh: &Mesh,
    n_windows: usize,
    lambda: f64,
    u: &[f64],
) -> (Vec<f64>, f64) {
    let r = residual_vector(system, lambda, u);
    let per: Vec<f64> = (0..n_windows)
        .map(|k| mesh.vertices_with_tag(BoundaryClass::Window(k)).iter().map(|&i| r[i]).sum())
        .collect();
    let mut all: Vec<usize> = (0..n_windows)
        .flat_map(|k| mesh.vertices_with_tag(BoundaryClass::Window(k)))
        .collect();
    all.sort_unstable();
    all.dedup();
    let total = all.iter().map(|&i| r[i]).sum();
    (per, total)
}

/// Point location by walking across triangle edges.
pub struct Locator<'a> {
    mesh: &'a Mesh,
    neighbors: Vec<[Option<usize>; 3]>,
    last: std::cell::Cell<usize>,
}

impl<'a> Locator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut neighbors = vec![[None; 3]; mesh.triangles.len()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some((s, j)) = owner.remove(&key) {
                    neighbors[t][i] = Some(s);
                    neighbors[s][j] = Some(t);
                } else {
                    owner.insert(key, (t, i));
                }
            }
        }
        Self {
            mesh,
            neighbors,
            last: std::cell::Cell::new(0),
        }
    }

    fn barycentric(&self, t: usize, x: [f64; 2]) -> [f64; 3] {
        let p = self.mesh.triangles[t].map(|i| self.mesh.vertices[i]);
        let area = signed_area(p[0], p[1], p[2]);
        [
            signed_area(x, p[1], p[2]) / area,
            signed_area(p[0], x, p[2]) / area,
            signed_area(p[0], p[1], x) / area,
        ]
    }

    /// Containing triangle and barycentric weights. Points outside the chordal
    /// polygon are projected onto the boundary edge where the walk leaves.
    pub fn locate(&self, x: [f64; 2]) -> (usize, [f64; 3]) {
        let mut t = self.last.get();
        for _ in 0..=self.mesh.triangles.len() {
            let l = self.barycentric(t, x);
            let (worst, &min) = l
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("three coordinates");
            if min >= -1e-13 {
                self.last.set(t);
                return (t, clamp(l));
            }
            match self.neighbors[t][worst] {
                Some(n) => t = n,
                None => {
                    self.last.set(t);
                    let mut l = l;
                    l[worst] = 0.0;
                    let (a, b) = ((worst + 1) % 3, (worst + 2) % 3);
                    let s = (l[a] / (l[a] + l[b])).clamp(0.0, 1.0);
                    l[a] = s;
                    l[b] = 1.0 - s;
                    return (t, l);
                }
            }
        }
        unreachable!("walk visited more steps than triangles")
    }

    pub fn interpolate(&self, u: &[f64], x: [f64; 2]) -> f64 {
        let (t, l) = self.locate(x);
        let tri = self.mesh.triangles[t];
        (0..3).map(|i| l[i] * u[tri[i]]).sum()
    }
}

fn clamp(l: [f64; 3]) -> [f64; 3] {
    let c = l.map(|v| v.max(0.0));
    let s: f64 = c.iter().sum();
    c.map(|v| v / s)
}

/// `n` equally spaced samples `(x, u(x, y0))` across the chord `{y = y0}`.
pub fn trace_along_cut(mesh: &Mesh, u: &[f64], y0: f64, n: usize) -> Vec<([f64; 2], f64)> {
    assert!(y0.abs() < 1.0, "cut must intersect the open disk");
    let half = (1.0 - y0 * y0).sqrt();
    let loc = Locator::new(mesh);
    (0..n)
        .map(|i| {
            let s = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            let x = [-half + 2.0 * half * s, y0];
            (x, loc.interpolate(u, x))
        })
        .collect()
}

/// Seven-point Dunavant rule (degree 5) on the reference triangle: barycentric point and weight.
const DUNAVANT7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_2;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `‖u_h − g‖_{L²}` over the triangulation with a degree-5 rule per element.
pub fn l2_distance<F: Fn([f64; 2]) -> f64>(mesh: &Mesh, u: &[f64], g: F) -> f64 {
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(t);
        let p = tri.map(|i| mesh.vertices[i]);
        for (l, w) in DUNAVANT7 {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let uh: f64 = (0..3).map(|i| l[i] * u[tri[i]]).sum();
            acc += w * area * (uh - g(x)).powi(2);
        }
    }
    acc.sqrt()
}

/// Rayleigh quotient of the interpolant of `min(φ, 0)`, zeroed on constrained dofs.
pub fn quasimode_rayleigh_quotient(system: &SparseSystem, mesh: &Mesh, qm: &Quasimode<f64>) -> f64 {
    let v: Vec<f64> = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if system.dirichlet[i] {
                0.0
            } else {
                qm.phi_unchecked(&x[..]).min(0.0)
            }
        })
        .collect();
    system.stiffness.bilinear(&v, &v) / system.mass.bilinear(&v, &v)
}
