//! Command-line front end: single solves, convergence studies, solver
//! comparisons and 2D-to-3D slowness extrusion.

use std::fmt;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::ser::Formatter;
use thiserror::Error;

use crate::factoring::PointSourceFactor;
use crate::grid::io::{read_grid, write_grid, IoError};
use crate::grid::{GridSpec, SlownessGrid, StencilKind};
use crate::marcher::{solve, SolveError, SolveStats, SolverConfig};
use crate::problems::{
    classic_fmm, convergence_study, rel_linf_error, AnalyticProblem, ConvergenceReport, ProblemError, ProblemKind,
    StudyConfig,
};
use crate::updates::QuadRule;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Problem(ProblemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        match e {
            ProblemError::Solve(s) => CliError::Solve(s),
            other => CliError::Problem(other),
        }
    }
}

impl CliError {
    /// 2 for bad input (flags, files, grid data), 1 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(_) => 1,
            _ => 2,
        }
    }
}

fn input_err(e: impl fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "olim", version, about = "Ordered line integral eikonal solvers on uniform grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write the U field, its sidecar and a stats JSON.
    Solve(SolveArgs),
    /// Run a convergence study on an analytic problem and write a CSV report.
    Converge(ConvergeArgs),
    /// Run two methods on the same grid and report per-node differences.
    Compare(CompareArgs),
    /// Extrude a 2D slowness file along a new middle axis.
    Extrude(ExtrudeArgs),
}

/// Point source given as `x,y[,z]` with an optional `=value` (default 0).
#[derive(Clone, Debug, PartialEq)]
pub struct SourceArg {
    pub coord: Vec<f64>,
    pub value: f64,
}

impl FromStr for SourceArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (coords, value) = match s.split_once('=') {
            Some((c, v)) => (c, v.trim().parse::<f64>().map_err(|e| format!("bad source value '{v}': {e}"))?),
            None => (s, 0.0),
        };
        let coord = coords
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| format!("bad source coordinate '{c}': {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if !(2..=3).contains(&coord.len()) || coord.iter().any(|c| !c.is_finite()) {
            return Err(format!("source '{s}' must have 2 or 3 finite coordinates"));
        }
        if !(value >= 0.0 && value.is_finite()) {
            return Err(format!("source value {value} must be finite and nonnegative"));
        }
        Ok(SourceArg { coord, value })
    }
}

/// A solver to run: `<stencil>_<rule>` with optional `_noskip` / `_nokkt`
/// suffixes, `fmm` for the classic fast marching oracle, or `file:PATH`
/// for a previously written U field.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Olim { stencil: StencilKind, rule: QuadRule, skip: bool, kkt_skip: bool },
    Fmm,
    File(PathBuf),
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "fmm" {
            return Ok(Method::Fmm);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Method::File(PathBuf::from(path)));
        }
        let mut parts = s.split('_');
        let stencil = parts.next().unwrap_or_default().parse::<StencilKind>()?;
        let rule = parts.next().ok_or_else(|| format!("method '{s}' needs a rule, e.g. {stencil}_rhr"))?.parse()?;
        let (mut skip, mut kkt_skip) = (true, true);
        for flag in parts {
            match flag {
                "noskip" => skip = false,
                "nokkt" => kkt_skip = false,
                _ => return Err(format!("unknown method flag '{flag}' (expected noskip or nokkt)")),
            }
        }
        Ok(Method::Olim { stencil, rule, skip, kkt_skip })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Olim { stencil, rule, skip, kkt_skip } => {
                write!(f, "{stencil}_{rule}")?;
                if !skip {
                    f.write_str("_noskip")?;
                }
                if !kkt_skip {
                    f.write_str("_nokkt")?;
                }
                Ok(())
            }
            Method::Fmm => f.write_str("fmm"),
            Method::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Where the slowness comes from and where the sources are.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Analytic problem: s1, s2, s3, s4, linear_speed or constant.
    #[arg(long, conflicts_with = "slowness_file")]
    pub problem: Option<ProblemKind>,
    /// Dimension of the analytic problem.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Nodes per axis of the analytic problem's grid.
    #[arg(long, default_value_t = 33)]
    pub n: usize,
    /// Raw f64 slowness grid with a JSON sidecar at `<path>.json`.
    #[arg(long)]
    pub slowness_file: Option<PathBuf>,
    /// Point source `x,y[,z][=value]`, snapped to the nearest node. Repeatable.
    /// Analytic problems default to their own sources.
    #[arg(long = "source", value_name = "X,Y[,Z][=U]")]
    pub sources: Vec<SourceArg>,
    /// Factoring radius in physical units (default: 0.1 times the domain diameter).
    #[arg(long, conflicts_with = "no_factor")]
    pub factor_radius: Option<f64>,
    /// Solve without factoring.
    #[arg(long)]
    pub no_factor: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Stencil: olim4, olim8, olim6, olim18, olim26 or olim3d (default: olim8 in 2D, olim26 in 3D).
    #[arg(long)]
    pub stencil: Option<StencilKind>,
    /// Quadrature rule: rhr, mp0 or mp1.
    #[arg(long, default_value = "mp0")]
    pub quad: QuadRule,
    /// Disable top-down visibility skipping.
    #[arg(long)]
    pub no_skip: bool,
    /// Disable bottom-up KKT skipping.
    #[arg(long)]
    pub no_kkt: bool,
    /// Output U field; the sidecar goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Stats JSON (default `<out>.stats.json`).
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Analytic problem: s1, s2, s3, s4, linear_speed or constant.
    #[arg(long)]
    pub problem: ProblemKind,
    /// Dimension of the analytic problem.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Comma-separated grid sizes, e.g. 17,33,65.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    /// Comma-separated solver configurations, e.g. olim6_rhr,olim26_mp0.
    #[arg(long = "config", value_delimiter = ',', required = true)]
    pub configs: Vec<Method>,
    /// Factoring radius in physical units (default: 0.1 times the domain diameter).
    #[arg(long, conflicts_with = "no_factor")]
    pub factor_radius: Option<f64>,
    /// Solve without factoring.
    #[arg(long)]
    pub no_factor: bool,
    /// Concurrent solves (default: available cores).
    #[arg(long, env = "EIK_JOBS")]
    pub jobs: Option<usize>,
    /// CSV output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// First method (`<stencil>_<rule>[_noskip][_nokkt]`, `fmm` or `file:PATH`).
    #[arg(long)]
    pub a: Method,
    /// Second method.
    #[arg(long)]
    pub b: Method,
    /// JSON output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtrudeArgs {
    /// 2D slowness file.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of copies along the new axis.
    #[arg(long)]
    pub ny: usize,
    /// Output 3D slowness file.
    #[arg(long)]
    pub out: PathBuf,
}

/// JSON formatter printing every float with 17 significant digits.
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|source| CliError::Io(IoError::Io { path: p.to_path_buf(), source }))
        }
        None => io::stdout().write_all(text.as_bytes()).map_err(input_err),
    }
}

#[derive(Clone, Debug, Serialize)]
struct SnappedSource {
    coord: Vec<f64>,
    node: usize,
    node_coord: Vec<f64>,
    distance: f64,
    value: f64,
}

/// Grid, boundary data and factors shared by `solve` and `compare`.
struct Setup {
    grid: SlownessGrid,
    problem: Option<AnalyticProblem>,
    sources: Vec<SnappedSource>,
    factors: Vec<PointSourceFactor>,
}

impl Setup {
    fn boundary(&self) -> Vec<(usize, f64)> {
        self.sources.iter().map(|s| (s.node, s.value)).collect()
    }

    fn exact(&self) -> Result<Option<Vec<f64>>, CliError> {
        match &self.problem {
            Some(p) => Ok(Some(p.exact_field(self.grid.spec())?)),
            None => Ok(None),
        }
    }
}

fn snap(spec: &GridSpec, coord: &[f64], value: f64) -> Result<SnappedSource, CliError> {
    if coord.len() != spec.dim {
        return Err(CliError::Input(format!("source {coord:?} does not match the grid dimension {}", spec.dim)));
    }
    let (node, distance) = spec.nearest_node(coord).map_err(input_err)?;
    let node_coord = spec.coord3(node)[..spec.dim].to_vec();
    if distance > spec.h / 2.0 * 1e-9 {
        eprintln!("warning: source {coord:?} snapped to node {node} at {node_coord:?}, distance {distance:.16e}");
    }
    Ok(SnappedSource { coord: coord.to_vec(), node, node_coord, distance, value })
}

fn setup(input: &InputArgs) -> Result<Setup, CliError> {
    let (grid, problem) = match (&input.problem, &input.slowness_file) {
        (Some(kind), None) => {
            let p = AnalyticProblem::new(*kind, input.dim)?;
            let spec = p.grid_spec(input.n)?;
            (p.slowness_grid(&spec)?, Some(p))
        }
        (None, Some(path)) => {
            let (spec, s) = read_grid(path)?;
            (SlownessGrid::new(spec, s).map_err(IoError::from)?, None)
        }
        _ => return Err(CliError::Input("exactly one of --problem and --slowness-file is required".into())),
    };
    let spec = grid.spec().clone();
    let r_fac = if input.no_factor { None } else { Some(input.factor_radius.unwrap_or(0.1 * spec.diameter())) };
    if let Some(r) = r_fac {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(CliError::Input(format!("factor radius {r} must be finite and nonnegative")));
        }
    }
    let mut sources = Vec::new();
    let mut factors = Vec::new();
    if input.sources.is_empty() {
        let Some(p) = &problem else {
            return Err(CliError::Input("--source is required with --slowness-file".into()));
        };
        // The problem's own sources: exact coordinates for the factors, exact
        // solution values at the snapped nodes.
        for (src, (node, value)) in p.sources.iter().zip(p.boundary(&spec)?) {
            let mut s = snap(&spec, src, value)?;
            s.node = node;
            sources.push(s);
        }
        if let Some(r) = r_fac {
            factors = p.factors(r)?;
        }
    } else {
        for arg in &input.sources {
            let s = snap(&spec, &arg.coord, arg.value)?;
            if let Some(r) = r_fac {
                let s_src = match &problem {
                    Some(p) => p.eval(&s.node_coord)?.1,
                    None => grid.at(s.node),
                };
                factors.push(PointSourceFactor::new(s.node_coord.clone(), s_src, r).map_err(input_err)?);
            }
            sources.push(s);
        }
    }
    Ok(Setup { grid, problem, sources, factors })
}

fn solver_config(
    stencil: StencilKind,
    rule: QuadRule,
    skip: bool,
    kkt_skip: bool,
    factors: &[PointSourceFactor],
) -> SolverConfig {
    let mut c = SolverConfig::new(stencil, rule).with_factors(factors.to_vec());
    c.skip = skip;
    c.kkt_skip = kkt_skip;
    c
}

#[derive(Serialize)]
struct SolveReport<'a> {
    grid: &'a GridSpec,
    config: &'a SolverConfig,
    sources: &'a [SnappedSource],
    seconds: f64,
    stats: &'a SolveStats,
    /// Relative l-infinity error against the analytic solution, sources excluded.
    error: Option<f64>,
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let setup = setup(&args.input)?;
    let stencil = args.stencil.unwrap_or(match setup.grid.spec().dim {
        2 => StencilKind::Olim8,
        _ => StencilKind::Olim26,
    });
    let config = solver_config(stencil, args.quad, !args.no_skip, !args.no_kkt, &setup.factors);
    let boundary = setup.boundary();
    let start = Instant::now();
    let sol = solve(&setup.grid, &boundary, &config)?;
    let seconds = start.elapsed().as_secs_f64();
    let exclude: Vec<usize> = boundary.iter().map(|b| b.0).collect();
    let error = match setup.exact()? {
        Some(exact) => Some(rel_linf_error(&sol.values, &exact, &exclude)?),
        None => None,
    };
    write_grid(&args.out, &sol.spec, &sol.values)?;
    let report =
        SolveReport { grid: &sol.spec, config: &config, sources: &setup.sources, seconds, stats: &sol.stats, error };
    let stats_path = args.stats.clone().unwrap_or_else(|| {
        let mut s = args.out.as_os_str().to_owned();
        s.push(".stats.json");
        PathBuf::from(s)
    });
    write_text(Some(&stats_path), &to_json(&report))
}

pub fn cmd_converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let problem = AnalyticProblem::new(args.problem, args.dim)?;
    let diameter = problem.grid_spec(2)?.diameter();
    let r_fac = if args.no_factor { None } else { Some(args.factor_radius.unwrap_or(0.1 * diameter)) };
    let configs = args
        .configs
        .iter()
        .map(|m| match m {
            Method::Olim { stencil, rule, skip: true, kkt_skip: true } => Ok(StudyConfig::new(*stencil, *rule, r_fac)),
            other => {
                Err(CliError::Input(format!("converge supports only <stencil>_<rule> configurations, got {other}")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let reports = convergence_study(&problem, &configs, &args.ns, jobs)?;
    write_text(args.out.as_deref(), &ConvergenceReport::to_csv(&reports))
}

#[derive(Serialize)]
struct MethodResult {
    method: String,
    seconds: Option<f64>,
    stats: Option<SolveStats>,
    error: Option<f64>,
}

#[derive(Serialize)]
struct CompareReport {
    a: MethodResult,
    b: MethodResult,
    /// Per-node `|a - b| / max(|a|, |b|)`, zero where both vanish.
    max_rel_diff: f64,
    mean_rel_diff: f64,
    max_abs_diff: f64,
}

fn run_method(
    method: &Method,
    setup: Option<&Setup>,
    exact: Option<&[f64]>,
) -> Result<(GridSpec, Vec<f64>, MethodResult), CliError> {
    let need = || setup.ok_or_else(|| CliError::Input(format!("method {method} needs --problem or --slowness-file")));
    let mut result = MethodResult { method: method.to_string(), seconds: None, stats: None, error: None };
    let (spec, values, exclude): (GridSpec, Vec<f64>, Vec<usize>) = match method {
        Method::File(path) => {
            let (spec, values) = read_grid(path)?;
            let exclude = setup.map(|s| s.boundary().iter().map(|b| b.0).collect()).unwrap_or_default();
            (spec, values, exclude)
        }
        Method::Fmm => {
            let s = need()?;
            if !s.factors.is_empty() {
                eprintln!("warning: fmm ignores factoring");
            }
            let boundary = s.boundary();
            let start = Instant::now();
            let values = classic_fmm(&s.grid, &boundary)?;
            result.seconds = Some(start.elapsed().as_secs_f64());
            (s.grid.spec().clone(), values, boundary.iter().map(|b| b.0).collect())
        }
        Method::Olim { stencil, rule, skip, kkt_skip } => {
            let s = need()?;
            let config = solver_config(*stencil, *rule, *skip, *kkt_skip, &s.factors);
            let boundary = s.boundary();
            let start = Instant::now();
            let sol = solve(&s.grid, &boundary, &config)?;
            result.seconds = Some(start.elapsed().as_secs_f64());
            result.stats = Some(sol.stats);
            (sol.spec, sol.values, boundary.iter().map(|b| b.0).collect())
        }
    };
    if let Some(exact) = exact {
        if exact.len() == values.len() {
            result.error = Some(rel_linf_error(&values, exact, &exclude)?);
        }
    }
    Ok((spec, values, result))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let files_only = matches!(args.a, Method::File(_)) && matches!(args.b, Method::File(_));
    let has_input = args.input.problem.is_some() || args.input.slowness_file.is_some();
    let setup = if files_only && !has_input { None } else { Some(setup(&args.input)?) };
    let exact = match &setup {
        Some(s) => s.exact()?,
        None => None,
    };
    let (spec_a, a, res_a) = run_method(&args.a, setup.as_ref(), exact.as_deref())?;
    let (spec_b, b, res_b) = run_method(&args.b, setup.as_ref(), exact.as_deref())?;
    if spec_a.shape != spec_b.shape || spec_a.dim != spec_b.dim {
        return Err(CliError::Input(format!("shape mismatch: {:?} vs {:?}", spec_a.shape, spec_b.shape)));
    }
    let (mut max_rel, mut sum_rel, mut max_abs) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(&b) {
        let d = if x == y { 0.0 } else { (x - y).abs() };
        let scale = x.abs().max(y.abs());
        let rel = if d == 0.0 { 0.0 } else { d / scale };
        max_rel = max_rel.max(rel);
        sum_rel += rel;
        max_abs = max_abs.max(d);
    }
    let report = CompareReport {
        a: res_a,
        b: res_b,
        max_rel_diff: max_rel,
        mean_rel_diff: sum_rel / a.len().max(1) as f64,
        max_abs_diff: max_abs,
    };
    write_text(args.out.as_deref(), &to_json(&report))
}

pub fn cmd_extrude(args: &ExtrudeArgs) -> Result<(), CliError> {
    let (spec, s) = read_grid(&args.input)?;
    let grid = SlownessGrid::new(spec, s).map_err(IoError::from)?;
    let out = grid.extrude(args.ny).map_err(IoError::from)?;
    write_grid(&args.out, out.spec(), out.values())?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Extrude(a) => cmd_extrude(a),
    }
}

/// Parses the arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
