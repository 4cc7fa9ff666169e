//! Command-line front end: closed-form predictions, quasimode tables, level-set
//! curves, finite-element solves, Monte Carlo ensembles and ε sweeps, all
//! written as CSV and SVG files.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use narrow_escape::asymptotics::predict;
use narrow_escape::compare::{run_compare, sim_params, CompareError};
use narrow_escape::config::{ExperimentConfig, StartKind};
use narrow_escape::fem::{self, trace_along_cut, BoundaryMode};
use narrow_escape::geometry::{modified_boundary_polyline, Dimension, DomainConfig, LevelSetBounds};
use narrow_escape::montecarlo::{run_ensemble, ExitDomain, QsdDensity, StartMode};
use narrow_escape::quasimode::Quasimode;
use narrow_escape::svg::render_contour;

#[derive(Debug, Parser)]
#[command(name = "narrow-escape", version, about = "Narrow escape on the unit disk and ball")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the file's `output` entry, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; defaults to `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the Monte Carlo ensemble.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 4 when a statistical test fails.
    #[arg(long, global = true)]
    assert: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Asymptotic eigenvalue, fluxes and exit probabilities (`asym.csv`).
    Asym,
    /// Quasimode tables.
    Quasimode {
        #[command(subcommand)]
        action: QuasimodeAction,
    },
    /// Zero level set of the quasimode near each window (`levelset_<k>.csv`).
    Levelset {
        /// Points per curve.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Finite-element eigenpairs, fluxes and a contour plot of the ground state.
    FemSolve(FemArgs),
    /// Reflected Brownian motion ensemble (`samples.csv`, `stats.csv`).
    McRun(McArgs),
    /// Sweep over ε comparing all three views (`compare.csv`, `lambda_vs_eps.svg`).
    Compare,
}

#[derive(Debug, Subcommand)]
enum QuasimodeAction {
    /// φ and |∇φ| on an n × n grid over [-1, 1]², inside the disk (`quasimode.csv`).
    Eval {
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
struct FemArgs {
    #[arg(long)]
    hmax: Option<f64>,
    #[arg(long)]
    grading: Option<u32>,
    #[arg(long)]
    nev: Option<usize>,
    /// Reflect on the windows and absorb on the rest of the circle.
    #[arg(long)]
    swap_bc: bool,
    /// Points along the cut y = 0.
    #[arg(long, default_value_t = 201)]
    cut_points: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StartArg {
    Uniform,
    QsdFem,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum)]
    start: Option<StartArg>,
    /// Expected dimension of the configured domain.
    #[arg(long)]
    dim: Option<usize>,
    /// Exits before this time are discarded.
    #[arg(long)]
    decorrelation_time: Option<f64>,
    #[arg(long)]
    max_time: Option<f64>,
    /// Treat the whole boundary as absorbing.
    #[arg(long)]
    all_absorbing: bool,
    /// Fixed start point, comma separated.
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
}

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Statistical(String),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Statistical(_) => 4,
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn numerical<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Numerical(e.into())
}

fn io<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Io(e.into())
}

struct RunContext {
    experiment: ExperimentConfig,
    out: PathBuf,
    seed: u64,
    assert: bool,
}

impl RunContext {
    fn load(global: &Global) -> Outcome<Self> {
        let path = global
            .config
            .as_ref()
            .ok_or_else(|| config_err(anyhow::anyhow!("--config is required")))?;
        let experiment = ExperimentConfig::from_path(path).map_err(config_err)?;
        let out = global
            .out
            .clone()
            .or_else(|| experiment.output.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out)
            .with_context(|| format!("creating {}", out.display()))
            .map_err(io)?;
        let seed = global.seed.unwrap_or(experiment.mc_section().seed);
        Ok(Self {
            experiment,
            out,
            seed,
            assert: global.assert,
        })
    }

    fn domain(&self) -> Outcome<DomainConfig<f64>> {
        self.experiment.domain_config().map_err(config_err)
    }

    fn write(&self, name: &str, text: &str) -> Outcome<PathBuf> {
        let path = self.out.join(name);
        std::fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(io)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn asym(ctx: &RunContext) -> Outcome<()> {
    let d = ctx.domain()?;
    let p = predict(&d);
    let n = d.windows().len();
    let mut header = vec!["kbar", "lambda0", "lambda0_band", "mean_exit_time", "total_flux", "exit_prob_band"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend((0..n).map(|k| format!("flux_{k}")));
    header.extend((0..n).map(|k| format!("exit_prob_{k}")));
    let mut row = vec![d.kbar(), p.lambda0, p.lambda0_band, p.mean_exit_time, p.total_flux, p.exit_prob_band];
    row.extend(&p.per_window_flux);
    row.extend(&p.exit_prob);
    let text = format!(
        "{}\n{}\n",
        header.join(","),
        row.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
    );
    print!("{text}");
    ctx.write("asym.csv", &text)?;
    Ok(())
}

fn planar(d: &DomainConfig<f64>, what: &str) -> Outcome<()> {
    if d.dimension() != Dimension::Two {
        return Err(config_err(anyhow::anyhow!("{what} needs a planar domain")));
    }
    Ok(())
}

fn quasimode_eval(ctx: &RunContext, grid: usize) -> Outcome<()> {
    if grid < 2 {
        return Err(config_err(anyhow::anyhow!("--grid must be at least 2")));
    }
    let d = ctx.domain()?;
    planar(&d, "quasimode eval")?;
    let qm = Quasimode::new(d);
    let mut text = String::from("x,y,phi,grad_norm\n");
    for j in 0..grid {
        for i in 0..grid {
            let x = -1.0 + 2.0 * i as f64 / (grid - 1) as f64;
            let y = -1.0 + 2.0 * j as f64 / (grid - 1) as f64;
            if x * x + y * y >= 1.0 {
                continue;
            }
            let (Ok(phi), Ok(g)) = (qm.phi(&[x, y]), qm.grad_phi(&[x, y])) else {
                continue;
            };
            let _ = writeln!(text, "{},{},{},{}", num(x), num(y), num(phi), num(g[0].hypot(g[1])));
        }
    }
    ctx.write("quasimode.csv", &text)?;
    Ok(())
}

fn levelset(ctx: &RunContext, points: usize) -> Outcome<()> {
    let d = ctx.domain()?;
    planar(&d, "levelset")?;
    let n = d.windows().len();
    let qm = Quasimode::new(d);
    let bounds = LevelSetBounds::default();
    for k in 0..n {
        let curve = modified_boundary_polyline(&qm, &bounds, k, points).map_err(numerical)?;
        let mut text = String::from("x,y\n");
        for p in curve {
            let _ = writeln!(text, "{},{}", num(p[0]), num(p[1]));
        }
        ctx.write(&format!("levelset_{k}.csv"), &text)?;
    }
    Ok(())
}

fn fem_solve(ctx: &RunContext, args: &FemArgs) -> Outcome<()> {
    let d = ctx.domain()?;
    planar(&d, "fem-solve")?;
    let mut params = ctx.experiment.fem_params();
    if let Some(h) = args.hmax {
        params.h_max = h;
    }
    if let Some(g) = args.grading {
        params.grading_levels = g;
    }
    if let Some(n) = args.nev {
        params.nev = n;
    }
    let mode = if args.swap_bc {
        BoundaryMode::Swapped
    } else {
        BoundaryMode::Mixed
    };
    let sol = fem::solve_seeded(&d, &params, mode, ctx.seed).map_err(|e| match e {
        fem::FemError::Mesh(fem::MeshError::InvalidParameter(_)) => config_err(e),
        e => numerical(e),
    })?;
    log::info!(
        "{} vertices, {} triangles, {} iterations",
        sol.mesh.n_vertices(),
        sol.mesh.triangles.len(),
        sol.eigen.iterations
    );
    if sol.mesh.low_accuracy_near_junctions() {
        log::warn!("junction grading disabled; fluxes converge slowly");
    }
    let mut eigen = String::from("index,eigenvalue\n");
    for (i, l) in sol.eigen.eigenvalues.iter().enumerate() {
        let _ = writeln!(eigen, "{i},{}", num(*l));
    }
    ctx.write("eigen.csv", &eigen)?;

    let mut cut = String::from("x,y,u0\n");
    for (p, u) in trace_along_cut(&sol.mesh, sol.eigen.u0(), 0.0, args.cut_points.max(2)) {
        let _ = writeln!(cut, "{},{},{}", num(p[0]), num(p[1]), num(u));
    }
    ctx.write("u0_cut.csv", &cut)?;

    if mode == BoundaryMode::Mixed {
        let probs = sol.exit_probabilities();
        let mut fluxes = String::from("window,flux,probability\n");
        for (k, (f, p)) in sol.eigen.window_fluxes.iter().zip(&probs).enumerate() {
            let _ = writeln!(fluxes, "{k},{},{}", num(*f), num(*p));
        }
        ctx.write("fluxes.csv", &fluxes)?;
    }
    let svg = render_contour("u₀", &sol.mesh.vertices, &sol.mesh.triangles, sol.eigen.u0(), 10).map_err(numerical)?;
    ctx.write("u0.svg", &svg)?;
    Ok(())
}

fn mc_run(ctx: &RunContext, args: &McArgs) -> Outcome<()> {
    let d = ctx.domain()?;
    if let Some(dim) = args.dim {
        if dim != d.dimension().as_usize() {
            return Err(config_err(anyhow::anyhow!(
                "--dim {dim} does not match the configured dimension {}",
                d.dimension().as_usize()
            )));
        }
    }
    let mut experiment = ctx.experiment.clone();
    let mut mc = experiment.mc_section();
    if let Some(n) = args.n {
        mc.n_paths = n;
    }
    if let Some(dt) = args.dt {
        mc.dt = dt;
    }
    if let Some(s) = args.start {
        mc.start = match s {
            StartArg::Uniform => StartKind::Uniform,
            StartArg::QsdFem => StartKind::QsdFem,
        };
    }
    if let Some(t) = args.decorrelation_time {
        mc.decorrelation_time = t;
    }
    if args.max_time.is_some() {
        mc.max_time = args.max_time;
    }
    experiment.mc = Some(mc.clone());

    let qsd = if mc.start == StartKind::QsdFem {
        planar(&d, "the qsd-fem start")?;
        let sol = fem::solve_seeded(&d, &experiment.fem_params(), BoundaryMode::Mixed, ctx.seed).map_err(numerical)?;
        let density = QsdDensity::new(&sol.mesh, sol.eigen.u0()).map_err(numerical)?;
        log::info!("qsd rejection acceptance {:.3}", density.acceptance_rate());
        Some(density)
    } else {
        None
    };
    let mut params = sim_params(&experiment, ctx.seed, qsd).map_err(config_err)?;
    if let Some(x0) = &args.x0 {
        params.start = StartMode::Fixed(x0.clone());
    }
    let domain = if args.all_absorbing {
        ExitDomain::all_absorbing(d.dimension())
    } else {
        ExitDomain::from_config(&d)
    };
    let ens = run_ensemble(&domain, &params).map_err(|e| match e {
        narrow_escape::montecarlo::McError::InvalidParameter(_) => config_err(e),
        e => numerical(e),
    })?;

    let dim = domain.dim();
    let mut samples = String::from("exit_time,window,angle,censored\n");
    for s in &ens.samples {
        let _ = writeln!(
            samples,
            "{},{},{},{}",
            num(s.exit_time),
            s.window.map(|w| w.to_string()).unwrap_or_default(),
            num(s.exit_angle(dim)),
            u8::from(s.censored)
        );
    }
    ctx.write("samples.csv", &samples)?;

    let st = &ens.stats;
    let mut stats = String::from("quantity,value\n");
    let mut put = |k: &str, v: String| {
        let _ = writeln!(stats, "{k},{v}");
    };
    put("n_paths", st.n_paths.to_string());
    put("dt", num(params.dt));
    put("seed", params.seed.to_string());
    put("censored", st.censored.to_string());
    put("censored_fraction", num(st.censored_fraction));
    put("decorrelation_time", num(st.decorrelation_time));
    put("discarded", st.discarded.to_string());
    put("mean_exit_time", num(st.mean_exit_time));
    put("std_error", num(st.std_error));
    put("lambda_hat", num(st.lambda_hat));
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    put("ks_statistic", opt(st.ks.map(|k| k.0)));
    put("ks_p_value", opt(st.ks.map(|k| k.1)));
    put("chi2", opt(st.independence.map(|c| c.0)));
    put("chi2_dof", st.independence.map(|c| c.1.to_string()).unwrap_or_default());
    put("chi2_p_value", opt(st.independence.map(|c| c.2)));
    for (k, ((c, p), (lo, hi))) in st.counts.iter().zip(&st.probabilities).zip(&st.wilson).enumerate() {
        put(&format!("count_{k}"), c.to_string());
        put(&format!("probability_{k}"), num(*p));
        put(&format!("wilson_low_{k}"), num(*lo));
        put(&format!("wilson_high_{k}"), num(*hi));
    }
    ctx.write("stats.csv", &stats)?;
    if st.censored_fraction > 0.01 {
        log::warn!("{:.2}% of paths censored", 100.0 * st.censored_fraction);
    }

    if ctx.assert {
        let mut failed = Vec::new();
        match st.ks {
            Some((_, p)) if p > 0.01 => {}
            Some((_, p)) => failed.push(format!("exponentiality p = {p:.3e}")),
            None => failed.push("exponentiality test unavailable".into()),
        }
        if st.counts.len() > 1 {
            match st.independence {
                Some((_, _, p)) if p > 0.01 => {}
                Some((_, _, p)) => failed.push(format!("independence p = {p:.3e}")),
                None => failed.push("independence test unavailable".into()),
            }
        }
        if !failed.is_empty() {
            return Err(Failure::Statistical(failed.join("; ")));
        }
    }
    Ok(())
}

fn compare(ctx: &RunContext) -> Outcome<()> {
    run_compare(&ctx.experiment, &ctx.out, ctx.seed).map_err(|e| match e {
        CompareError::Config(_) => config_err(e),
        CompareError::Io { .. } => io(e),
        e => numerical(e),
    })?;
    log::info!("wrote {}", ctx.out.join("compare.csv").display());
    Ok(())
}

fn run(cli: &Cli) -> Outcome<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(config_err)?;
    }
    let ctx = RunContext::load(&cli.global)?;
    match &cli.command {
        Command::Asym => asym(&ctx),
        Command::Quasimode {
            action: QuasimodeAction::Eval { grid },
        } => quasimode_eval(&ctx, *grid),
        Command::Levelset { points } => levelset(&ctx, *points),
        Command::FemSolve(args) => fem_solve(&ctx, args),
        Command::McRun(args) => mc_run(&ctx, args),
        Command::Compare => compare(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) | Failure::Numerical(e) | Failure::Io(e) => log::error!("{e:#}"),
                Failure::Statistical(m) => log::error!("statistical check failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
