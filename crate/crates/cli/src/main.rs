use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rys_lab_core::catalog::{catalog_entries, CaseParams};
use rys_lab_core::report::{profile_csv, run_integrate, run_verify, Num, Report, RunConfig};
use rys_lab_core::soliton::SolitonParams;
use rys_lab_core::solver::{solve_radial, uniform_grid, Ansatz, Background, RadialProfile, SolveOptions};
use rys_lab_core::LabError;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "rys-lab", version, about = "Numerical checks for Ricci-Yamabe solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pointwise and integral identity suite.
    Verify(RunArgs),
    /// Run only the quadrature checks on compact cases.
    Integrate(RunArgs),
    /// Solve the radial gradient soliton equation on a space form.
    Solve(SolveArgs),
    /// List the catalog.
    Catalog,
}

#[derive(Args)]
struct RunArgs {
    /// Case name, repeatable; `all` selects every entry.
    #[arg(long = "case", default_value = "all")]
    cases: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed for randomly generated entries (perturbed-flat).
    #[arg(long)]
    case_seed: Option<u64>,
    /// Sample points per chart.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Tolerance override as NAME=VALUE, repeatable.
    #[arg(long = "tol")]
    tolerances: Vec<String>,
    #[arg(long, default_value_t = 24)]
    resolution: usize,
    /// Random test functions for the divergence check.
    #[arg(long, default_value_t = 3)]
    divergence_functions: usize,
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Record wall time in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackgroundKind {
    Flat,
    Sphere,
    Hyperbolic,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnsatzKind {
    Free,
    Constant,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "flat")]
    background: BackgroundKind,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Grid nodes.
    #[arg(long, default_value_t = 128)]
    grid: usize,
    #[arg(long, default_value_t = 2.0)]
    r_max: f64,
    #[arg(long, value_enum, default_value = "free")]
    ansatz: AnsatzKind,
    #[arg(long, default_value_t = rys_lab_core::solver::MAX_ITERATIONS)]
    max_iterations: usize,
    /// CSV path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match cli.command {
        Command::Verify(args) => run_report(args, run_verify),
        Command::Integrate(args) => run_report(args, run_integrate),
        Command::Solve(args) => solve(args),
        Command::Catalog => {
            catalog();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RYS_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("RYS_LAB_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig {
        cases: args.cases.clone(),
        params: CaseParams {
            alpha: args.alpha,
            beta: args.beta,
            lambda: args.lambda,
            mu: args.mu,
            radius: args.radius,
            epsilon: args.epsilon,
            seed: args.case_seed,
        },
        points: args.points,
        seed: args.seed,
        resolution: args.resolution,
        divergence_functions: args.divergence_functions,
        ..RunConfig::default()
    };
    for item in &args.tolerances {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--tol expects NAME=VALUE, got `{item}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Failure::Usage(format!("bad tolerance value in `{item}`")))?;
        cfg.tolerances.set(name, value)?;
    }
    Ok(cfg)
}

fn run_report(args: RunArgs, run: fn(&RunConfig) -> rys_lab_core::Result<Report>) -> Result<(), Failure> {
    let cfg = run_config(&args)?;
    let start = Instant::now();
    let mut report = run(&cfg)?;
    if args.timing {
        report.wall_time_seconds = Some(Num(start.elapsed().as_secs_f64()));
    }
    emit(args.output.as_deref(), &report.to_json())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let s = report.summary;
    eprintln!("{} checks, {} passed, {} failed", s.total, s.passed, s.failed);
    if report.all_passed() {
        return Ok(());
    }
    let mut msg = String::new();
    for r in report.failures() {
        let who = match &r.instance {
            Some(i) => format!("{}/{}", r.case, i),
            None => r.case.clone(),
        };
        let detail = r.error.clone().unwrap_or_else(|| format!("gap {:e} > tol {:e}", r.gap.0, r.tol.0));
        msg.push_str(&format!("FAIL {who} {}: {detail}\n", r.name));
    }
    Err(Failure::Check(msg.trim_end().to_string()))
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let background = match args.background {
        BackgroundKind::Flat => Background::Flat,
        BackgroundKind::Sphere => Background::Sphere { radius: args.radius },
        BackgroundKind::Hyperbolic => Background::Hyperbolic { radius: args.radius },
    };
    let params = SolitonParams::new(args.alpha, args.beta, args.lambda, args.mu)?;
    let grid = uniform_grid(args.grid, args.r_max)?;
    let init = RadialProfile::new(grid.clone(), vec![0.0; grid.len()], params, background, args.dim)?;
    let options = SolveOptions {
        max_iterations: args.max_iterations,
        ansatz: match args.ansatz {
            AnsatzKind::Free => Ansatz::Free,
            AnsatzKind::Constant => Ansatz::Constant,
        },
        ..SolveOptions::default()
    };
    match solve_radial(&init, &options) {
        Ok(out) => {
            emit(args.output.as_deref(), &profile_csv(&out.profile)?)?;
            eprintln!(
                "converged in {} iterations, max residual {:e}",
                out.iterations, out.residual_inf
            );
            Ok(())
        }
        Err(e @ LabError::NoConvergence { .. }) => Err(Failure::Check(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn catalog() {
    let mut out = String::new();
    for e in catalog_entries() {
        let kind = if e.compact { "compact" } else { "open" };
        out.push_str(&format!("{}\t{}\t{}\t{}\n", e.name, e.dim(), kind, e.description));
    }
    print!("{out}");
}

/// Writes to `path` through a temporary file in the same directory, or to stdout.
fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write output: {e}"));
    let Some(path) = path else {
        std::io::stdout().write_all(contents.as_bytes()).map_err(io)?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
