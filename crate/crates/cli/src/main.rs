//! `nematic`: batch front end for the droplet energy library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nematic::energy::AnchoringSpec;
use nematic::flows::{mean_convexify, run_imcf, run_mcf, FlowOptions};
use nematic::format::to_json_string;
use nematic::geometry::{build_icosphere, radial_surface, surface_geometry, to_obj, RadialSurface, ShapeDescriptor, SurfaceFile};
use nematic::muniform::{uniformity_report, Point2, Polygon2D, UniformityOptions};
use nematic::optimizer::{energy_landscape_scan, landscape_argmin, landscape_csv, optimize, LandscapeOptions, OptimizationConfig, Termination};
use nematic::verify::{run_suite, VerifyOptions};
use nematic::Error;

#[derive(Parser)]
#[command(name = "nematic", version, about = "Nematic droplet energies, curvature flows and domain checks")]
struct Cli {
    /// Seed for every randomized step; overrides seeds in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Directory for default output files and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a radial surface and write it as JSON (and optionally OBJ).
    Mesh(MeshArgs),
    /// Alternating shape/director minimization from a JSON config.
    Optimize(OptimizeArgs),
    /// Inverse mean curvature flow with a per-step trace.
    Imcf(ImcfArgs),
    /// Explicit mean curvature flow with a per-step trace.
    Mcf(McfArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Estimate the uniformity constant of a polygon.
    Muniform(MuniformArgs),
    /// Energy across fixed-volume spheroids of varying aspect.
    Landscape(LandscapeArgs),
}

#[derive(Args)]
struct ShapeArgs {
    /// `sphere:R`, `ellipsoid:a,b,c`, `perturbed:R;l,m,amp;...` or `seeded:R,amplitude,seed`.
    #[arg(long, default_value = "sphere:1")]
    shape: String,
    #[arg(long, default_value_t = 3)]
    level: u32,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Surface JSON path [default: <out-dir>/mesh.json].
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    obj: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, default_value_t = 1e-3)]
    h_floor: f64,
    #[arg(long, default_value_t = 0.2)]
    cfl: f64,
    /// Disable the one-pass curvature smoothing.
    #[arg(long)]
    no_smoothing: bool,
}

impl FlowArgs {
    fn options(&self) -> FlowOptions {
        FlowOptions { h_floor: self.h_floor, cfl: self.cfl, smooth_curvature: !self.no_smoothing }
    }
}

#[derive(Args)]
struct ImcfArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Run MCF first until `H ≥ DELTA` everywhere.
    #[arg(long, value_name = "DELTA")]
    convexify: Option<f64>,
    /// Trace CSV path [default: <out-dir>/imcf.csv].
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    flow: FlowArgs,
}

#[derive(Args)]
struct McfArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    /// Trace CSV path [default: <out-dir>/mcf.csv].
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final surface JSON [default: <out-dir>/mcf_final.json].
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    flow: FlowArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// bulk, minkowski, isoperimetric, divergence, lsc, invariants or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 4)]
    level: u32,
    #[arg(long, default_value_t = 16)]
    layers: usize,
    #[arg(long, default_value_t = 6)]
    geometry_level: u32,
    /// Sweep budget of each director solve.
    #[arg(long, default_value_t = 20_000)]
    max_sweeps: usize,
    /// Report JSON path [default: <out-dir>/verify_<suite>.json].
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MuniformArgs {
    /// Polygon JSON `{"vertices": [[x, y], ...]}`.
    #[arg(long, conflicts_with = "preset")]
    polygon: Option<PathBuf>,
    /// `square`, `ngon:N`, `dumbbell:W` or `slit:DEPTH,WIDTH`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    h: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 100.0)]
    m_max: f64,
    /// Report JSON path [default: <out-dir>/muniform.json].
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LandscapeArgs {
    /// Comma-separated z/x aspect ratios.
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.7,0.8,0.9,1.0,1.1,1.25,1.5,1.75,2.0")]
    aspects: Vec<f64>,
    /// Surface tension for normal anchoring.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 3)]
    level: u32,
    #[arg(long, default_value_t = 8)]
    layers: usize,
    /// CSV path [default: <out-dir>/landscape.csv].
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Written next to the outputs of every run, including failed ones.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: Option<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    version: String,
    wall_time_s: f64,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Failure with its exit code: 1 failed verification, 2 invalid input, 3 numerical failure.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::InvalidTimestep(_) | Error::NotConvex(_) | Error::Io(_) | Error::Json(_) => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

struct Run<'a> {
    cli: &'a Cli,
    outputs: Vec<PathBuf>,
    config: Option<PathBuf>,
}

impl Run<'_> {
    fn path(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.cli.out_dir.join(default))
    }

    fn write(&mut self, path: &Path, text: &str) -> Result<(), Failure> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| invalid(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), Failure> {
        let text = to_json_string(value).map_err(Error::from)?;
        self.write(path, &(text + "\n"))
    }
}

fn parse_shape(text: &str) -> Result<ShapeDescriptor, Failure> {
    if let Some(rest) = text.strip_prefix("seeded:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let [r, amp, seed] = parts.as_slice() else {
            return Err(invalid(format!("'{text}': seeded takes radius,amplitude,seed")));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| invalid(format!("'{s}': {e}")));
        let seed = seed.parse::<u64>().map_err(|e| invalid(format!("'{seed}': {e}")))?;
        return Ok(ShapeDescriptor::seeded_perturbation(num(r)?, num(amp)?, seed));
    }
    Ok(text.parse()?)
}

fn build_surface(args: &ShapeArgs) -> Result<RadialSurface, Failure> {
    let shape = parse_shape(&args.shape)?;
    Ok(radial_surface(Arc::new(build_icosphere(args.level)?), &shape)?)
}

fn parse_preset(text: &str) -> Result<Polygon2D, Failure> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let nums = || -> Result<Vec<f64>, Failure> {
        rest.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| invalid(format!("'{s}': {e}")))).collect()
    };
    let p = match (kind, nums().ok().as_deref()) {
        ("square", _) => Polygon2D::unit_square(),
        ("ngon", Some([n])) if *n >= 3.0 && n.fract() == 0.0 => Polygon2D::regular(*n as usize, 0.5, Point2::new(0.5, 0.5))?,
        ("dumbbell", Some([w])) => Polygon2D::dumbbell(*w)?,
        ("slit", Some([d, w])) => Polygon2D::slit_square(*d, *w)?,
        _ => return Err(invalid(format!("unknown polygon preset '{text}'"))),
    };
    Ok(p)
}

fn cmd_mesh(run: &mut Run, a: &MeshArgs) -> Result<(), Failure> {
    let s = build_surface(&a.shape)?;
    let out = run.path(&a.output, "mesh.json");
    run.write_json(&out, &SurfaceFile::from(&s))?;
    if let Some(obj) = &a.obj {
        run.write(obj, &to_obj(&s))?;
    }
    let g = surface_geometry(&s)?;
    eprintln!("{} vertices, area {:.6}, volume {:.6}, totalH {:.6}", s.rho().len(), g.area, g.volume, g.total_mean_curvature);
    Ok(())
}

fn cmd_optimize(run: &mut Run, a: &OptimizeArgs) -> Result<(), Failure> {
    run.config = Some(a.config.clone());
    let text = std::fs::read_to_string(&a.config).map_err(|e| invalid(format!("{}: {e}", a.config.display())))?;
    let mut cfg: OptimizationConfig =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", a.config.display())))?;
    if let Some(seed) = run.cli.seed {
        cfg.seed = seed;
    }
    let result = optimize(&cfg)?;
    let result_path = run.path(&None, "optimize_result.json");
    run.write_json(&result_path, &result.to_file())?;
    let history = run.path(&None, "optimize_history.csv");
    run.write(&history, &result.history_csv())?;
    let obj = run.path(&None, "optimize_final.obj");
    run.write(&obj, &to_obj(&result.surface))?;
    eprintln!(
        "termination {:?}: total {:.6} (bulk {:.6}, surface {:.6}), asphericity {:.4}",
        result.termination,
        result.energy.total,
        result.energy.bulk,
        result.energy.surface,
        result.surface.asphericity()
    );
    match result.termination {
        Termination::DirectorFailure(msg) => Err(Failure { code: 3, message: msg }),
        _ => Ok(()),
    }
}

fn cmd_imcf(run: &mut Run, a: &ImcfArgs) -> Result<(), Failure> {
    let mut s = build_surface(&a.shape)?;
    let opts = a.flow.options();
    if let Some(delta) = a.convexify {
        let (convex, steps) = mean_convexify(&s, delta, 100_000, &opts)?;
        eprintln!("mean convexified in {steps} MCF steps");
        s = convex;
    }
    let trace = run_imcf(&s, a.t_end, a.dt, &opts)?;
    let path = run.path(&a.trace, "imcf.csv");
    run.write(&path, &trace.to_csv())?;
    let meta = run.path(&None, "imcf_meta.json");
    run.write_json(&meta, &trace.metadata)?;
    eprintln!("{} rows, largest step increase of y {:.3e}", trace.rows.len(), trace.max_y_increase());
    Ok(())
}

fn cmd_mcf(run: &mut Run, a: &McfArgs) -> Result<(), Failure> {
    let s = build_surface(&a.shape)?;
    let (end, trace) = run_mcf(&s, a.steps, a.dt, &a.flow.options())?;
    let path = run.path(&a.trace, "mcf.csv");
    run.write(&path, &trace.to_csv())?;
    let out = run.path(&a.output, "mcf_final.json");
    run.write_json(&out, &SurfaceFile::from(&end))?;
    Ok(())
}

fn cmd_verify(run: &mut Run, a: &VerifyArgs) -> Result<(), Failure> {
    let opts = VerifyOptions {
        level: a.level,
        layers: a.layers,
        geometry_level: a.geometry_level,
        seed: run.cli.seed.unwrap_or(0),
        max_sweeps: a.max_sweeps,
    };
    let reports = run_suite(&a.suite, &opts)?;
    let path = run.path(&a.output, &format!("verify_{}.json", a.suite));
    if let [single] = reports.as_slice() {
        run.write_json(&path, single)?;
    } else {
        run.write_json(&path, &reports)?;
    }
    let mut failed = 0;
    for r in &reports {
        eprintln!("{}: {}", r.suite, if r.pass { "PASS" } else { "FAIL" });
        for c in r.failures() {
            failed += 1;
            eprintln!("  {} lhs={} rhs={} margin={} {}", c.id, c.lhs, c.rhs, c.margin, c.note.as_deref().unwrap_or(""));
        }
    }
    if failed > 0 {
        return Err(Failure { code: 1, message: format!("{failed} verification case(s) failed") });
    }
    Ok(())
}

fn cmd_muniform(run: &mut Run, a: &MuniformArgs) -> Result<(), Failure> {
    let polygon = match (&a.polygon, &a.preset) {
        (Some(path), _) => {
            run.config = Some(path.clone());
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Polygon2D>(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        (None, Some(p)) => parse_preset(p)?,
        (None, None) => return Err(invalid("give --polygon or --preset")),
    };
    let opts = UniformityOptions { samples: a.samples, h: a.h, m_max: a.m_max, seed: run.cli.seed.unwrap_or(0), margin: None };
    let report = uniformity_report(&polygon, &opts)?;
    let path = run.path(&a.output, "muniform.json");
    run.write_json(&path, &report)?;
    eprintln!("M estimate {} over {} pairs, {} infeasible", report.m_estimate, report.pairs_tested, report.infeasible_pairs);
    Ok(())
}

fn cmd_landscape(run: &mut Run, a: &LandscapeArgs) -> Result<(), Failure> {
    let spec = AnchoringSpec::DirichletNormal { mu: a.mu };
    let opts = LandscapeOptions { level: a.level, layers: a.layers, ..Default::default() };
    let rows = energy_landscape_scan(&a.aspects, &spec, &opts)?;
    let path = run.path(&a.output, "landscape.csv");
    run.write(&path, &landscape_csv(&rows))?;
    if let Some(best) = landscape_argmin(&rows) {
        eprintln!("minimum at aspect {} with total {:.6}", best.aspect, best.total);
    }
    Ok(())
}

fn dispatch(run: &mut Run, command: &Command) -> Result<(), Failure> {
    match command {
        Command::Mesh(a) => cmd_mesh(run, a),
        Command::Optimize(a) => cmd_optimize(run, a),
        Command::Imcf(a) => cmd_imcf(run, a),
        Command::Mcf(a) => cmd_mcf(run, a),
        Command::Verify(a) => cmd_verify(run, a),
        Command::Muniform(a) => cmd_muniform(run, a),
        Command::Landscape(a) => cmd_landscape(run, a),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Mesh(_) => "mesh",
        Command::Optimize(_) => "optimize",
        Command::Imcf(_) => "imcf",
        Command::Mcf(_) => "mcf",
        Command::Verify(_) => "verify",
        Command::Muniform(_) => "muniform",
        Command::Landscape(_) => "landscape",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let start = Instant::now();
    let mut run = Run { cli: &cli, outputs: Vec::new(), config: None };
    let result = if cli.threads == 0 {
        Err(invalid("--threads must be at least 1"))
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build()
            .map_err(|e| Failure { code: 3, message: e.to_string() })
            .and_then(|pool| pool.install(|| dispatch(&mut run, &cli.command)))
    };
    let (code, error) = match result {
        Ok(()) => (0, None),
        Err(f) => {
            eprintln!("error: {}", f.message);
            (f.code, Some(f.message))
        }
    };
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        config: run.config.clone(),
        outputs: run.outputs.clone(),
        seed: cli.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        exit_code: code,
        error,
    };
    let path = cli.out_dir.join("manifest.json");
    let written = std::fs::create_dir_all(&cli.out_dir)
        .and_then(|_| std::fs::write(&path, to_json_string(&manifest).unwrap_or_default() + "\n"));
    if let Err(e) = written {
        eprintln!("error: cannot write manifest {}: {e}", path.display());
        return ExitCode::from(if code == 0 { 2 } else { code });
    }
    ExitCode::from(code)
}
