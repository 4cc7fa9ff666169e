//! TOML experiment files.
//!
//! ```toml
//! output = "out"
//!
//! [domain]
//! dimension = 2
//! strict = false
//!
//! [[window]]
//! angle = 0.0
//! epsilon = 0.1
//!
//! [[window]]
//! angle = 3.141592653589793
//! k_eps = 0.4343
//!
//! [fem]
//! h_max = 0.05
//! grading_levels = 8
//!
//! [mc]
//! n_paths = 100000
//! dt = 1e-5
//!
//! [sweep]
//! epsilons = [1e-2, 1e-4, 1e-6]
//! scaling = "power"
//! exponents = [1.0, 2.0]
//! ```
//!
//! Unknown keys are rejected. Each window gives exactly one of `epsilon` (the
//! chord radius) and `k_eps`; inside a sweep both may be omitted since the
//! radii come from the sweep. Spatial windows use `direction = [x, y, z]`.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::asymptotics::Scaling;
use crate::fem::FemParams;
use crate::geometry::{validate_config, Dimension, DomainConfig, GeometryError, WindowSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub dimension: usize,
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowEntry {
    pub angle: Option<f64>,
    pub direction: Option<[f64; 3]>,
    pub epsilon: Option<f64>,
    pub k_eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Uniform,
    QsdFem,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub max_time: Option<f64>,
    pub start: StartKind,
    pub decorrelation_time: f64,
    pub reflect_step: Option<f64>,
    pub max_step: Option<f64>,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: 1e-5,
            seed: 42,
            max_time: None,
            start: StartKind::Uniform,
            decorrelation_time: 0.0,
            reflect_step: None,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    #[serde(default = "default_scaling")]
    pub scaling: Scaling,
    /// Per-window factors `a_k`; empty means all ones.
    #[serde(default)]
    pub exponents: Vec<f64>,
    #[serde(default)]
    pub run_mc: bool,
}

fn default_scaling() -> Scaling {
    Scaling::Common
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSection,
    #[serde(default, rename = "window")]
    pub windows: Vec<WindowEntry>,
    pub fem: Option<FemParams>,
    pub mc: Option<McSection>,
    pub sweep: Option<SweepSection>,
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn dimension(&self) -> Result<Dimension, ConfigError> {
        Dimension::from_usize(self.domain.dimension)
            .ok_or_else(|| ConfigError::Invalid(format!("dimension must be 2 or 3, got {}", self.domain.dimension)))
    }

    fn check(&self) -> Result<(), ConfigError> {
        let dim = self.dimension()?;
        if self.windows.is_empty() {
            return Err(ConfigError::Invalid("at least one [[window]] is required".into()));
        }
        for (i, w) in self.windows.iter().enumerate() {
            match (dim, w.angle.is_some(), w.direction.is_some()) {
                (Dimension::Two, true, false) | (Dimension::Three, false, true) => {}
                (Dimension::Two, ..) => return Err(ConfigError::Invalid(format!("window {i}: planar windows take `angle` only"))),
                (Dimension::Three, ..) => {
                    return Err(ConfigError::Invalid(format!("window {i}: spatial windows take `direction` only")))
                }
            }
            match (w.epsilon.is_some(), w.k_eps.is_some()) {
                (true, true) => {
                    return Err(ConfigError::Invalid(format!("window {i}: give exactly one of `epsilon` and `k_eps`")))
                }
                (false, false) if self.sweep.is_none() => {
                    return Err(ConfigError::Invalid(format!("window {i}: missing `epsilon` or `k_eps`")))
                }
                _ => {}
            }
        }
        if let Some(s) = &self.sweep {
            if s.epsilons.is_empty() {
                return Err(ConfigError::Invalid("sweep.epsilons is empty".into()));
            }
            if s.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                return Err(ConfigError::Invalid("sweep.epsilons must lie in (0, 1)".into()));
            }
            if s.epsilons.windows(2).any(|p| !(p[1] < p[0])) {
                return Err(ConfigError::Invalid("sweep.epsilons must be strictly decreasing".into()));
            }
            if !s.exponents.is_empty() && s.exponents.len() != self.windows.len() {
                return Err(ConfigError::Invalid(format!(
                    "sweep.exponents has {} entries for {} windows",
                    s.exponents.len(),
                    self.windows.len()
                )));
            }
            if s.exponents.iter().any(|&a| !(a > 0.0)) {
                return Err(ConfigError::Invalid("sweep.exponents must be positive".into()));
            }
        }
        if let Some(f) = &self.fem {
            if !(f.h_max > 0.0 && f.h_max <= 0.5) {
                return Err(ConfigError::Invalid(format!("fem.h_max = {} outside (0, 0.5]", f.h_max)));
            }
            if f.nev == 0 || !(f.tol > 0.0) {
                return Err(ConfigError::Invalid("fem.nev and fem.tol must be positive".into()));
            }
        }
        if let Some(m) = &self.mc {
            if m.n_paths == 0 || !(m.dt > 0.0) {
                return Err(ConfigError::Invalid("mc.n_paths and mc.dt must be positive".into()));
            }
        }
        Ok(())
    }

    fn window(&self, i: usize, dim: Dimension, epsilon: Option<f64>, k_eps: Option<f64>) -> Result<WindowSpec<f64>, ConfigError> {
        let w = &self.windows[i];
        let spec = match (dim, epsilon, k_eps) {
            (Dimension::Two, Some(e), _) => WindowSpec::planar_with_radius(w.angle.unwrap_or(0.0), e),
            (Dimension::Two, None, Some(k)) => WindowSpec::planar(w.angle.unwrap_or(0.0), k),
            (Dimension::Three, Some(e), _) => WindowSpec::spatial_with_radius(w.direction.unwrap_or([0.0, 0.0, 1.0]), e),
            (Dimension::Three, None, Some(k)) => WindowSpec::spatial(w.direction.unwrap_or([0.0, 0.0, 1.0]), k),
            (_, None, None) => return Err(ConfigError::Invalid(format!("window {i}: no size given"))),
        };
        Ok(spec?)
    }

    /// Domain built from the window entries as written.
    pub fn domain_config(&self) -> Result<DomainConfig<f64>, ConfigError> {
        let dim = self.dimension()?;
        let windows = (0..self.windows.len())
            .map(|i| self.window(i, dim, self.windows[i].epsilon, self.windows[i].k_eps))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(validate_config(dim, windows, self.domain.strict)?)
    }

    /// One domain per sweep value, with window `k` of radius `scaling.radius(a_k, ε)`.
    pub fn sweep_configs(&self) -> Result<Vec<(f64, DomainConfig<f64>)>, ConfigError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("no [sweep] section".into()))?;
        let dim = self.dimension()?;
        s.epsilons
            .iter()
            .map(|&eps| {
                let windows = (0..self.windows.len())
                    .map(|i| {
                        let a = s.exponents.get(i).copied().unwrap_or(1.0);
                        self.window(i, dim, Some(s.scaling.radius(a, eps)), None)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((eps, validate_config(dim, windows, self.domain.strict)?))
            })
            .collect()
    }

    pub fn fem_params(&self) -> FemParams {
        self.fem.unwrap_or_default()
    }

    pub fn mc_section(&self) -> McSection {
        self.mc.clone().unwrap_or_default()
    }
}
