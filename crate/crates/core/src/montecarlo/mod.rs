//! Reflected Brownian motion `dX = √2 dB` in the unit disk or ball, absorbed
//! at the windows.
//!
//! Steps are Euler–Maruyama increments. A step ending outside the domain is
//! cut at its exact crossing with the boundary; the crossing point decides
//! between absorption (inside a window) and specular reflection.
//!
//! The nominal step `dt` is used close to the windows. Elsewhere the step grows
//! to `(d/5)²/2`, where `d` is the distance to the boundary (or, near the
//! reflecting part, to the nearest window), bounded by `reflect_step` near the
//! reflecting boundary and by `max_step` in the interior.

pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::fem::Mesh;
use crate::geometry::{Dimension, DomainConfig};

/// Steps of variance `2h` with `h = (d/5)²/2` reach distance `d` with probability below 1e-6.
const SAFE_STEP: f64 = 1.0 / 50.0;

pub use stats::{
    kolmogorov_survival, richardson_sqrt_dt, test_exponential, test_independence, wilson_interval, ExitStats,
    StatsError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("rejection envelope acceptance rate {0:.4} below 1%")]
    Envelope(f64),
    #[error("invalid simulation parameter: {0}")]
    InvalidParameter(String),
}

/// Absorbing part of the boundary.
#[derive(Debug, Clone)]
pub struct ExitDomain {
    dim: usize,
    /// Window centers and squared chord radii.
    windows: Vec<([f64; 3], f64)>,
    all_absorbing: bool,
    kbar: f64,
}

impl ExitDomain {
    pub fn from_config(config: &DomainConfig<f64>) -> Self {
        let windows = config
            .windows()
            .iter()
            .map(|w| {
                let p = w.point();
                let mut c = [0.0; 3];
                c[..p.len()].copy_from_slice(&p);
                let r = w.chord_radius();
                (c, r * r * (1.0 + 1e-12))
            })
            .collect();
        Self {
            dim: config.dimension().as_usize(),
            windows,
            all_absorbing: false,
            kbar: config.kbar(),
        }
    }

    /// Every boundary point absorbs; exits are reported as window 0.
    pub fn all_absorbing(dimension: Dimension) -> Self {
        Self {
            dim: dimension.as_usize(),
            windows: Vec::new(),
            all_absorbing: true,
            kbar: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_windows(&self) -> usize {
        if self.all_absorbing {
            1
        } else {
            self.windows.len()
        }
    }

    /// `100 / K̄`, or 100 without windows.
    pub fn default_max_time(&self) -> f64 {
        if self.kbar > 0.0 {
            100.0 / self.kbar
        } else {
            100.0
        }
    }

    /// Lower bound on the distance from `x` to the absorbing set.
    fn window_distance(&self, x: &[f64; 3]) -> f64 {
        if self.all_absorbing {
            return 0.0;
        }
        self.windows
            .iter()
            .map(|(c, r2)| {
                let d2: f64 = (0..3).map(|i| (x[i] - c[i]).powi(2)).sum();
                (d2.sqrt() - r2.sqrt()).max(0.0)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn window_at(&self, p: &[f64; 3]) -> Option<usize> {
        if self.all_absorbing {
            return Some(0);
        }
        self.windows.iter().position(|(c, r2)| {
            let d2: f64 = (0..3).map(|i| (p[i] - c[i]).powi(2)).sum();
            d2 <= *r2
        })
    }
}

/// Piecewise linear density `|u|` on a triangulation, sampled by rejection.
#[derive(Debug, Clone)]
pub struct QsdDensity {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    values: Vec<f64>,
    cumulative_area: Vec<f64>,
    envelope: f64,
    acceptance: f64,
}

impl QsdDensity {
    pub fn new(mesh: &Mesh, u: &[f64]) -> Result<Self, McError> {
        let values: Vec<f64> = u.iter().map(|v| v.abs()).collect();
        let envelope = values.iter().copied().fold(0.0, f64::max);
        let mut cumulative_area = Vec::with_capacity(mesh.triangles.len());
        let mut total = 0.0;
        let mut mass = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = mesh.triangle_area(t);
            total += a;
            mass += a * tri.iter().map(|&i| values[i]).sum::<f64>() / 3.0;
            cumulative_area.push(total);
        }
        let acceptance = if envelope > 0.0 { mass / (total * envelope) } else { 0.0 };
        if !(acceptance >= 0.01) {
            return Err(McError::Envelope(acceptance));
        }
        Ok(Self {
            vertices: mesh.vertices.clone(),
            triangles: mesh.triangles.clone(),
            values,
            cumulative_area,
            envelope,
            acceptance,
        })
    }

    /// Expected fraction of accepted proposals.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        let total = *self.cumulative_area.last().expect("nonempty mesh");
        loop {
            let target = rng.gen::<f64>() * total;
            let t = self.cumulative_area.partition_point(|&c| c < target).min(self.triangles.len() - 1);
            let (mut a, mut b) = (rng.gen::<f64>(), rng.gen::<f64>());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let l = [1.0 - a - b, a, b];
            let tri = self.triangles[t];
            let value: f64 = (0..3).map(|i| l[i] * self.values[tri[i]]).sum();
            if rng.gen::<f64>() * self.envelope <= value {
                let p = tri.map(|i| self.vertices[i]);
                let x = [
                    l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                    l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
                ];
                // Chordal triangles lie inside the disk; guard the open-domain precondition.
                let r = x[0].hypot(x[1]);
                return if r < 1.0 { x } else { [x[0] * (1.0 - 1e-12) / r, x[1] * (1.0 - 1e-12) / r] };
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum StartMode {
    Uniform,
    Fixed(Vec<f64>),
    QsdFem(std::sync::Arc<QsdDensity>),
}

#[derive(Debug, Clone)]
pub struct SimParams {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Censoring time; `None` uses `100 / K̄`.
    pub max_time: Option<f64>,
    pub start: StartMode,
    /// Largest step taken far from the boundary.
    pub max_step: f64,
    /// Largest step taken near the reflecting boundary away from the windows.
    pub reflect_step: f64,
    /// Exits before this time are discarded and later times are shifted by it.
    pub decorrelation_time: f64,
}

impl SimParams {
    pub fn new(dt: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            dt,
            n_paths,
            seed,
            max_time: None,
            start: StartMode::Uniform,
            max_step: 1e-2,
            reflect_step: dt.max(1e-4),
            decorrelation_time: 0.0,
        }
    }

    fn validate(&self, dim: usize) -> Result<(), McError> {
        let bad = |m: String| Err(McError::InvalidParameter(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {}", self.dt));
        }
        if self.n_paths == 0 {
            return bad("n_paths = 0".into());
        }
        if !(self.reflect_step >= self.dt && self.reflect_step <= self.max_step) {
            return bad(format!("reflect_step {} outside [dt, max_step]", self.reflect_step));
        }
        if !(self.max_step >= self.dt) {
            return bad(format!("max_step {} below dt {}", self.max_step, self.dt));
        }
        if !(self.decorrelation_time >= 0.0) {
            return bad(format!("decorrelation_time = {}", self.decorrelation_time));
        }
        match &self.start {
            StartMode::Fixed(x) if x.len() != dim => bad(format!("start point has {} coordinates", x.len())),
            StartMode::Fixed(x) if x.iter().map(|v| v * v).sum::<f64>() >= 1.0 => {
                bad("start point outside the open domain".into())
            }
            StartMode::QsdFem(_) if dim != 2 => bad("qsd-fem start is planar only".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitSample {
    pub exit_time: f64,
    pub window: Option<usize>,
    /// Exit point on the boundary (third coordinate zero in the plane).
    pub exit_point: [f64; 3],
    pub censored: bool,
}

impl ExitSample {
    /// Polar angle in `[0, 2π)` in the plane, colatitude in `[0, π]` in space.
    pub fn exit_angle(&self, dim: usize) -> f64 {
        let [x, y, z] = self.exit_point;
        if dim == 2 {
            crate::geometry::wrap_two_pi(y.atan2(x))
        } else {
            z.clamp(-1.0, 1.0).acos()
        }
    }
}

/// Per-path random stream: the seed selects the generator, the path index its stream.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

pub fn uniform_point<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            return x;
        }
    }
}

pub fn initial_point<R: Rng>(domain: &ExitDomain, params: &SimParams, rng: &mut R) -> Vec<f64> {
    match &params.start {
        StartMode::Uniform => uniform_point(domain.dim, rng),
        StartMode::Fixed(x) => x.clone(),
        StartMode::QsdFem(d) => d.sample(rng).to_vec(),
    }
}

/// Larger root `s` of `|a + s d|² = 1` for `|a| ≤ 1`.
fn crossing(a: &[f64; 3], d: &[f64; 3]) -> f64 {
    let ad: f64 = (0..3).map(|i| a[i] * d[i]).sum();
    let dd: f64 = (0..3).map(|i| d[i] * d[i]).sum();
    let aa: f64 = (0..3).map(|i| a[i] * a[i]).sum();
    let disc = (ad * ad - dd * (aa - 1.0)).max(0.0);
    let s = if ad <= 0.0 {
        (-ad + disc.sqrt()) / dd
    } else {
        // Stable form of the same root when the step points outward.
        (1.0 - aa) / (ad + disc.sqrt())
    };
    s.clamp(0.0, 1.0)
}

pub fn simulate_exit<R: Rng>(domain: &ExitDomain, params: &SimParams, x0: &[f64], rng: &mut R) -> ExitSample {
    let dim = domain.dim;
    let max_time = params.max_time.unwrap_or_else(|| domain.default_max_time());
    let mut x = [0.0; 3];
    x[..dim].copy_from_slice(x0);
    let mut t = 0.0;
    while t < max_time {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let d = (1.0 - r).max(0.0);
        let mut h = d * d * SAFE_STEP;
        if h < params.reflect_step {
            h = h.max((domain.window_distance(&x) * domain.window_distance(&x) * SAFE_STEP).min(params.reflect_step));
        }
        let h = h.clamp(params.dt, params.max_step);
        let scale = (2.0 * h).sqrt();
        let mut y = x;
        for yi in y.iter_mut().take(dim) {
            let xi: f64 = rng.sample(StandardNormal);
            *yi += scale * xi;
        }
        if y.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            x = y;
            t += h;
            continue;
        }
        let (mut a, mut b, mut frac) = (x, y, 0.0);
        for _ in 0..64 {
            let dvec = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let s = crossing(&a, &dvec);
            let mut p = [a[0] + s * dvec[0], a[1] + s * dvec[1], a[2] + s * dvec[2]];
            let pn = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            p.iter_mut().for_each(|v| *v /= pn);
            frac += s * (1.0 - frac);
            if let Some(k) = domain.window_at(&p) {
                return ExitSample {
                    exit_time: t + frac * h,
                    window: Some(k),
                    exit_point: p,
                    censored: false,
                };
            }
            let rem = [b[0] - p[0], b[1] - p[1], b[2] - p[2]];
            let rn: f64 = (0..3).map(|i| rem[i] * p[i]).sum();
            a = p;
            b = [rem[0] - 2.0 * rn * p[0] + p[0], rem[1] - 2.0 * rn * p[1] + p[1], rem[2] - 2.0 * rn * p[2] + p[2]];
            if b.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                break;
            }
        }
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bn >= 1.0 {
            b.iter_mut().for_each(|v| *v *= (1.0 - 1e-15) / bn);
        }
        x = b;
        t += h;
    }
    ExitSample {
        exit_time: max_time,
        window: None,
        exit_point: x,
        censored: true,
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub samples: Vec<ExitSample>,
    pub stats: ExitStats,
    pub dim: usize,
}

/// Independent paths, ordered by path index; the result does not depend on the thread count.
pub fn run_ensemble(domain: &ExitDomain, params: &SimParams) -> Result<Ensemble, McError> {
    params.validate(domain.dim)?;
    let samples: Vec<ExitSample> = (0..params.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(params.seed, i);
            let x0 = initial_point(domain, params, &mut rng);
            simulate_exit(domain, params, &x0, &mut rng)
        })
        .collect();
    let stats = ExitStats::from_samples(&samples, domain.n_windows(), params.decorrelation_time);
    Ok(Ensemble {
        samples,
        stats,
        dim: domain.dim,
    })
}
