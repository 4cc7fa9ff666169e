//! P1 stiffness and mass matrices with boundary-condition bookkeeping.

use crate::geometry::BoundaryClass;

use super::mesh::Mesh;
use super::sparse::CsrMatrix;

/// Which boundary vertices carry the homogeneous Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Windows absorbing, the rest of the circle reflecting.
    Mixed,
    /// Windows reflecting, the rest of the circle absorbing.
    Swapped,
    /// The whole circle absorbing.
    AllDirichlet,
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub dirichlet: Vec<bool>,
    pub mode: BoundaryMode,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.dirichlet[i]).collect()
    }

    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.dirichlet[i]).collect()
    }
}

/// Element stiffness of the linear triangle, `(b_i b_j + c_i c_j) / 4A`.
pub fn element_stiffness(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let (b, c, area) = shape_coefficients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    k
}

/// Element mass of the linear triangle, `A (1 + δ_ij) / 12`.
pub fn element_mass(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let (_, _, area) = shape_coefficients(p);
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] *= 2.0;
    }
    m
}

fn shape_coefficients(p: [[f64; 2]; 3]) -> ([f64; 3], [f64; 3], f64) {
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let area = 0.5 * (b[0] * c[1] - b[1] * c[0]);
    (b, c, area)
}

pub fn assemble(mesh: &Mesh) -> SparseSystem {
    assemble_with(mesh, BoundaryMode::Mixed)
}

pub fn assemble_with(mesh: &Mesh, mode: BoundaryMode) -> SparseSystem {
    let n = mesh.n_vertices();
    let mut kt = Vec::with_capacity(9 * mesh.triangles.len());
    let mut mt = Vec::with_capacity(9 * mesh.triangles.len());
    for t in &mesh.triangles {
        let p = t.map(|i| mesh.vertices[i]);
        let ke = element_stiffness(p);
        let me = element_mass(p);
        for a in 0..3 {
            for b in 0..3 {
                kt.push((t[a], t[b], ke[a][b]));
                mt.push((t[a], t[b], me[a][b]));
            }
        }
    }
    let mut dirichlet = vec![false; n];
    for &(a, b, tag) in &mesh.boundary_edges {
        let constrained = match (mode, tag) {
            (BoundaryMode::AllDirichlet, _) => true,
            (BoundaryMode::Mixed, BoundaryClass::Window(_)) => true,
            (BoundaryMode::Swapped, BoundaryClass::Neumann) => true,
            _ => false,
        };
        if constrained {
            dirichlet[a] = true;
            dirichlet[b] = true;
        }
    }
    for &j in &mesh.junction_nodes {
        dirichlet[j] = true;
    }
    SparseSystem {
        stiffness: CsrMatrix::from_triplets(n, kt),
        mass: CsrMatrix::from_triplets(n, mt),
        dirichlet,
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::build_mesh;
    use crate::geometry::{validate_config, Dimension, WindowSpec};
    use approx::assert_relative_eq;

    const REF: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    /// Integrates products of the reference hat functions with the three edge-midpoint rule,
    /// exact for quadratics.
    fn hat(i: usize, x: f64, y: f64) -> f64 {
        [1.0 - x - y, x, y][i]
    }

    #[test]
    fn reference_stiffness() {
        let k = element_stiffness(REF);
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(k[i][j], expected[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn reference_mass_matches_quadrature() {
        let m = element_mass(REF);
        let mids = [(0.5, 0.0), (0.5, 0.5), (0.0, 0.5)];
        for i in 0..3 {
            for j in 0..3 {
                let q: f64 = mids.iter().map(|&(x, y)| hat(i, x, y) * hat(j, x, y)).sum::<f64>() / 6.0;
                assert_relative_eq!(m[i][j], q, epsilon = 1e-15);
                assert_relative_eq!(m[i][j], if i == j { 2.0 } else { 1.0 } / 24.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn system_invariants() {
        let c = validate_config(
            Dimension::Two,
            vec![WindowSpec::planar_with_radius(0.0, 0.1).unwrap()],
            false,
        )
        .unwrap();
        let mesh = build_mesh(&c, 0.1, 4).unwrap();
        let s = assemble(&mesh);
        assert!(s.stiffness.asymmetry() < 1e-12);
        assert!(s.mass.asymmetry() < 1e-12);
        let ones = vec![1.0; s.n()];
        let total: f64 = s.mass.mul_vec(&ones).iter().sum();
        // Chordal polygon area differs from π by O(h²).
        assert!((total - std::f64::consts::PI).abs() / std::f64::consts::PI < 1e-2);
        for r in s.stiffness.mul_vec(&ones) {
            assert!(r.abs() < 1e-12);
        }
        for j in &mesh.junction_nodes {
            assert!(s.dirichlet[*j]);
        }
        let window = mesh.vertices_with_tag(BoundaryClass::Window(0));
        assert_eq!(s.dirichlet_dofs(), window);
        let swapped = assemble_with(&mesh, BoundaryMode::Swapped);
        let neumann = mesh.vertices_with_tag(BoundaryClass::Neumann);
        assert_eq!(swapped.dirichlet_dofs(), neumann);
    }
}
