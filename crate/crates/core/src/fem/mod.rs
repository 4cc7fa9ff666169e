//! P1 finite elements for the mixed Dirichlet–Neumann Laplacian on the unit disk.

pub mod assemble;
pub mod eigen;
pub mod mesh;
pub mod post;
pub mod sparse;

use thiserror::Error;

pub use assemble::{assemble, assemble_with, element_mass, element_stiffness, BoundaryMode, SparseSystem};
pub use eigen::{solve_smallest, solve_smallest_with, EigenError, EigenOptions, EigenResult};
pub use mesh::{build_mesh, Mesh, MeshError};
pub use post::{all_window_fluxes, l2_distance, quasimode_rayleigh_quotient, trace_along_cut, window_flux, Locator};

use crate::geometry::DomainConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FemParams {
    pub h_max: f64,
    pub grading_levels: u32,
    pub nev: usize,
    pub tol: f64,
}

impl Default for FemParams {
    fn default() -> Self {
        Self {
            h_max: 0.05,
            grading_levels: 8,
            nev: 2,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FemSolution {
    pub mesh: Mesh,
    pub system: SparseSystem,
    pub eigen: EigenResult,
}

impl FemSolution {
    /// Window fluxes normalized to sum to one.
    pub fn exit_probabilities(&self) -> Vec<f64> {
        let total: f64 = self.eigen.window_fluxes.iter().sum();
        self.eigen.window_fluxes.iter().map(|f| f / total).collect()
    }
}

/// Mesh, assemble, solve and attach the fluxes of the lowest mode.
pub fn solve(config: &DomainConfig<f64>, params: &FemParams, mode: BoundaryMode) -> Result<FemSolution, FemError> {
    solve_seeded(config, params, mode, EigenOptions::default().seed)
}

/// As [`solve`], with the seed of the random start block of the eigensolver.
pub fn solve_seeded(
    config: &DomainConfig<f64>,
    params: &FemParams,
    mode: BoundaryMode,
    seed: u64,
) -> Result<FemSolution, FemError> {
    let mesh = build_mesh(config, params.h_max, params.grading_levels)?;
    let system = assemble_with(&mesh, mode);
    let opts = EigenOptions {
        tol: params.tol,
        seed,
        ..EigenOptions::default()
    };
    let mut eigen = solve_smallest_with(&system, params.nev, opts)?;
    if mode == BoundaryMode::Mixed {
        let (per, total) = all_window_fluxes(&system, &mesh, config.windows().len(), eigen.eigenvalues[0], &eigen.eigenvectors[0]);
        eigen.window_fluxes = per;
        eigen.total_flux = total;
    }
    Ok(FemSolution { mesh, system, eigen })
}

/// Ascending eigenvalues with the window arcs reflecting and the rest of the circle absorbing.
pub fn solve_swapped_bc(
    config: &DomainConfig<f64>,
    h_max: f64,
    grading_levels: u32,
    nev: usize,
) -> Result<Vec<f64>, FemError> {
    let params = FemParams {
        h_max,
        grading_levels,
        nev,
        ..FemParams::default()
    };
    Ok(solve(config, &params, BoundaryMode::Swapped)?.eigen.eigenvalues)
}
