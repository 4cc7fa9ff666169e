//! Smallest eigenpairs of `K u = λ M u` on the free dofs by block inverse
//! (shift zero) subspace iteration with Rayleigh–Ritz projection.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::assemble::SparseSystem;
use super::sparse::{EnvelopeCholesky, FactorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("factorization failed: {0}")]
    Factor(#[from] FactorError),
    #[error("invalid request: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Extra subspace vectors beyond the requested count.
    pub guard: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            guard: 6,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// Full nodal vectors (zero on constrained dofs), `uᵀ M u = 1`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub window_fluxes: Vec<f64>,
    pub total_flux: f64,
}

impl EigenResult {
    pub fn lambda0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn u0(&self) -> &[f64] {
        &self.eigenvectors[0]
    }
}

struct Restricted {
    free: Vec<usize>,
    k: super::sparse::CsrMatrix,
    m: super::sparse::CsrMatrix,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn solve_smallest(system: &SparseSystem, nev: usize, tol: f64) -> Result<EigenResult, EigenError> {
    solve_smallest_with(system, nev, EigenOptions { tol, ..EigenOptions::default() })
}

pub fn solve_smallest_with(
    system: &SparseSystem,
    nev: usize,
    opts: EigenOptions,
) -> Result<EigenResult, EigenError> {
    if nev == 0 {
        return Err(EigenError::InvalidArgument("nev must be at least 1".into()));
    }
    let free = system.free_dofs();
    if free.is_empty() {
        return Err(EigenError::InvalidArgument("no free dofs".into()));
    }
    let r = Restricted {
        k: system.stiffness.restrict(&free),
        m: system.mass.restrict(&free),
        free,
    };
    let n = r.free.len();
    let nev = nev.min(n);
    let p = (nev + opts.guard).min(n);
    let chol = EnvelopeCholesky::factor(&r.k)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let z: Vec<Vec<f64>> = q.iter().map(|v| chol.solve(&r.m.mul_vec(v))).collect();
        let (vals, vecs) = rayleigh_ritz(&r, &z)?;
        q = vecs;
        let residuals: Vec<f64> = (0..nev).map(|i| residual(&r, vals[i], &q[i])).collect();
        last = residuals.iter().copied().fold(0.0, f64::max);
        if last <= opts.tol {
            return Ok(finish(system, &r, &vals[..nev], &q[..nev], residuals, it));
        }
    }
    Err(EigenError::Convergence {
        iterations: opts.max_iter,
        residual: last,
    })
}

fn residual(r: &Restricted, lambda: f64, u: &[f64]) -> f64 {
    let ku = r.k.mul_vec(u);
    let mu = r.m.mul_vec(u);
    let diff: Vec<f64> = ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
    norm(&diff) / norm(&mu)
}

/// Ritz pairs of the pencil projected on `span(z)`, ascending, `M`-orthonormal.
fn rayleigh_ritz(r: &Restricted, z: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    let p = z.len();
    let kz: Vec<Vec<f64>> = z.iter().map(|v| r.k.mul_vec(v)).collect();
    let mz: Vec<Vec<f64>> = z.iter().map(|v| r.m.mul_vec(v)).collect();
    let a = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&z[i], &kz[j]) + dot(&z[j], &kz[i])));
    let b = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&z[i], &mz[j]) + dot(&z[j], &mz[i])));
    // Scale to unit diagonal before factoring the Gram matrix.
    let d: Vec<f64> = (0..p).map(|i| 1.0 / b[(i, i)].sqrt()).collect();
    let a = DMatrix::from_fn(p, p, |i, j| a[(i, j)] * d[i] * d[j]);
    let b = DMatrix::from_fn(p, p, |i, j| b[(i, j)] * d[i] * d[j]);
    let l = b
        .cholesky()
        .ok_or(EigenError::Factor(FactorError::NotPositiveDefinite { row: 0, pivot: 0.0 }))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(EigenError::Factor(FactorError::NotPositiveDefinite { row: 0, pivot: 0.0 }))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let coeffs = linv.transpose() * &eig.eigenvectors;
    let n = z[0].len();
    let mut vals = Vec::with_capacity(p);
    let mut vecs = Vec::with_capacity(p);
    for &col in &order {
        vals.push(eig.eigenvalues[col]);
        let mut v = vec![0.0; n];
        for (i, zi) in z.iter().enumerate() {
            let w = coeffs[(i, col)] * d[i];
            for (vk, zk) in v.iter_mut().zip(zi) {
                *vk += w * zk;
            }
        }
        let s = r.m.bilinear(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= s);
        vecs.push(v);
    }
    Ok((vals, vecs))
}

fn finish(
    system: &SparseSystem,
    r: &Restricted,
    vals: &[f64],
    vecs: &[Vec<f64>],
    residuals: Vec<f64>,
    iterations: usize,
) -> EigenResult {
    let full: Vec<Vec<f64>> = vecs
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut u = vec![0.0; system.n()];
            for (&dof, &x) in r.free.iter().zip(v) {
                u[dof] = x;
            }
            if i == 0 && system.mass.mul_vec(&u).iter().sum::<f64>() > 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
            u
        })
        .collect();
    EigenResult {
        eigenvalues: vals.to_vec(),
        eigenvectors: full,
        residuals,
        iterations,
        window_fluxes: Vec::new(),
        total_flux: 0.0,
    }
}
