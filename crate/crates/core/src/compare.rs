//! Side-by-side sweep of the asymptotic, finite-element and Monte Carlo views.
//!
//! `compare.csv` has one row per (ε, window) with these columns:
//!
//! | column | meaning |
//! |---|---|
//! | `status` | `ok`, or `error: <message>` for a row whose solve failed |
//! | `eps` | sweep parameter |
//! | `kbar` | `K̄`, also the asymptotic eigenvalue |
//! | `lambda0_asym` | `K̄` |
//! | `lambda0_fem` | finite-element `λ₀` (empty in 3D) |
//! | `lambda_hat_mc` | reciprocal Monte Carlo mean exit time (empty unless requested) |
//! | `gap_fem` | `|λ₀_fem / K̄ − 1|` |
//! | `gap_mc` | `|λ̂_mc / λ₀_fem − 1|`, or relative to `K̄` without a FEM value |
//! | `fitted_c2` | `|λ₀_fem − K̄| / K̄²` |
//! | `window` | window index |
//! | `k_eps` | `K` of the window |
//! | `flux_asym`, `flux_fem` | boundary flux through the window |
//! | `prob_asym`, `prob_fem`, `prob_mc` | exit probability through the window |
//!
//! Missing values are empty fields. Rows are flushed as each ε completes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::asymptotics::predict;
use crate::config::{ConfigError, ExperimentConfig, StartKind};
use crate::fem::{self, BoundaryMode, FemError};
use crate::geometry::{Dimension, DomainConfig};
use crate::montecarlo::{run_ensemble, ExitDomain, McError, QsdDensity, SimParams, StartMode};
use crate::svg::{render_line, LinePlot, Series, SvgError};

pub const COMPARE_HEADER: &str = "status,eps,kbar,lambda0_asym,lambda0_fem,lambda_hat_mc,gap_fem,gap_mc,fitted_c2,window,k_eps,flux_asym,flux_fem,prob_asym,prob_fem,prob_mc";

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub k_eps: f64,
    pub flux_asym: f64,
    pub flux_fem: Option<f64>,
    pub prob_asym: f64,
    pub prob_fem: Option<f64>,
    pub prob_mc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub eps: f64,
    pub kbar: f64,
    pub lambda0_asym: f64,
    pub lambda0_fem: Option<f64>,
    pub lambda_hat_mc: Option<f64>,
    pub windows: Vec<WindowRow>,
}

impl ComparisonRow {
    pub fn gap_fem(&self) -> Option<f64> {
        self.lambda0_fem.map(|l| (l / self.kbar - 1.0).abs())
    }

    pub fn gap_mc(&self) -> Option<f64> {
        let reference = self.lambda0_fem.unwrap_or(self.kbar);
        self.lambda_hat_mc.map(|l| (l / reference - 1.0).abs())
    }

    pub fn fitted_c2(&self) -> Option<f64> {
        self.lambda0_fem.map(|l| (l - self.kbar).abs() / (self.kbar * self.kbar))
    }

    /// CSV lines of this row, one per window.
    pub fn csv_lines(&self) -> Vec<String> {
        self.windows
            .iter()
            .enumerate()
            .map(|(k, w)| {
                [
                    "ok".to_string(),
                    num(self.eps),
                    num(self.kbar),
                    num(self.lambda0_asym),
                    opt(self.lambda0_fem),
                    opt(self.lambda_hat_mc),
                    opt(self.gap_fem()),
                    opt(self.gap_mc()),
                    opt(self.fitted_c2()),
                    k.to_string(),
                    num(w.k_eps),
                    num(w.flux_asym),
                    opt(w.flux_fem),
                    num(w.prob_asym),
                    opt(w.prob_fem),
                    opt(w.prob_mc),
                ]
                .join(",")
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn plot(&self) -> LinePlot {
        let series = |label: &str, f: &dyn Fn(&ComparisonRow) -> Option<f64>| Series {
            label: label.into(),
            points: self.rows.iter().filter_map(|r| f(r).map(|v| (r.eps, v))).collect(),
        };
        let candidates = [
            series("asymptotic K̄", &|r| Some(r.lambda0_asym)),
            series("finite element", &|r| r.lambda0_fem),
            series("Monte Carlo", &|r| r.lambda_hat_mc),
        ];
        LinePlot {
            title: "principal eigenvalue versus window size".into(),
            x_label: "ε".into(),
            y_label: "λ₀".into(),
            log_x: true,
            series: candidates.into_iter().filter(|s| !s.points.is_empty()).collect(),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn error_line(eps: f64, message: &str) -> String {
    let clean = message.replace([',', '\n', '\r', '"'], " ");
    let mut fields = vec![String::new(); 16];
    fields[0] = format!("error: {clean}");
    fields[1] = num(eps);
    fields.join(",")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CompareError + '_ {
    move |source| CompareError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn compare_one(
    experiment: &ExperimentConfig,
    eps: f64,
    config: &DomainConfig<f64>,
    seed: u64,
) -> Result<ComparisonRow, CompareError> {
    let asym = predict(config);
    let n = config.windows().len();
    let mut row = ComparisonRow {
        eps,
        kbar: config.kbar(),
        lambda0_asym: asym.lambda0,
        lambda0_fem: None,
        lambda_hat_mc: None,
        windows: (0..n)
            .map(|k| WindowRow {
                k_eps: config.windows()[k].k_eps(),
                flux_asym: asym.per_window_flux[k],
                flux_fem: None,
                prob_asym: asym.exit_prob[k],
                prob_fem: None,
                prob_mc: None,
            })
            .collect(),
    };
    let mut qsd = None;
    if config.dimension() == Dimension::Two {
        let sol = fem::solve(config, &experiment.fem_params(), BoundaryMode::Mixed)?;
        row.lambda0_fem = Some(sol.eigen.lambda0());
        for (w, (&f, p)) in row
            .windows
            .iter_mut()
            .zip(sol.eigen.window_fluxes.iter().zip(sol.exit_probabilities()))
        {
            w.flux_fem = Some(f);
            w.prob_fem = Some(p);
        }
        if experiment.mc_section().start == StartKind::QsdFem {
            qsd = Some(QsdDensity::new(&sol.mesh, sol.eigen.u0())?);
        }
    }
    if experiment.sweep.as_ref().is_some_and(|s| s.run_mc) {
        let params = sim_params(experiment, seed, qsd)?;
        let ens = run_ensemble(&ExitDomain::from_config(config), &params)?;
        row.lambda_hat_mc = Some(ens.stats.lambda_hat);
        for (w, &p) in row.windows.iter_mut().zip(&ens.stats.probabilities) {
            w.prob_mc = Some(p);
        }
    }
    Ok(row)
}

/// Simulation parameters from the `[mc]` section with the given seed.
pub fn sim_params(experiment: &ExperimentConfig, seed: u64, qsd: Option<QsdDensity>) -> Result<SimParams, McError> {
    let mc = experiment.mc_section();
    let mut p = SimParams::new(mc.dt, mc.n_paths, seed);
    p.max_time = mc.max_time;
    p.decorrelation_time = mc.decorrelation_time;
    if let Some(s) = mc.max_step {
        p.max_step = s;
    }
    if let Some(s) = mc.reflect_step {
        p.reflect_step = s;
    }
    p.start = match (mc.start, qsd) {
        (StartKind::Uniform, _) => StartMode::Uniform,
        (StartKind::QsdFem, Some(d)) => StartMode::QsdFem(std::sync::Arc::new(d)),
        (StartKind::QsdFem, None) => {
            return Err(McError::InvalidParameter("qsd-fem start needs a planar finite-element solve".into()))
        }
    };
    Ok(p)
}

/// Runs the sweep, writing `compare.csv` and `lambda_vs_eps.svg` into `out_dir`.
///
/// A failing ε is recorded as an error row before the error is returned.
pub fn run_compare(experiment: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<ComparisonReport, CompareError> {
    let configs = experiment.sweep_configs()?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join("compare.csv");
    let mut csv = BufWriter::new(File::create(&csv_path).map_err(io_err(&csv_path))?);
    writeln!(csv, "{COMPARE_HEADER}").map_err(io_err(&csv_path))?;
    let mut report = ComparisonReport::default();
    for (eps, config) in &configs {
        log::info!("compare: eps = {eps:e}, kbar = {:.6}", config.kbar());
        match compare_one(experiment, *eps, config, seed) {
            Ok(row) => {
                for line in row.csv_lines() {
                    writeln!(csv, "{line}").map_err(io_err(&csv_path))?;
                }
                csv.flush().map_err(io_err(&csv_path))?;
                report.rows.push(row);
            }
            Err(e) => {
                writeln!(csv, "{}", error_line(*eps, &e.to_string())).map_err(io_err(&csv_path))?;
                csv.flush().map_err(io_err(&csv_path))?;
                return Err(e);
            }
        }
    }
    let svg_path = out_dir.join("lambda_vs_eps.svg");
    std::fs::write(&svg_path, render_line(&report.plot())?).map_err(io_err(&svg_path))?;
    Ok(report)
}
