use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{power_fit, rel_linf_error, AnalyticProblem, ProblemError};
use crate::grid::StencilKind;
use crate::marcher::{solve, SolveStats, SolverConfig};
use crate::updates::QuadRule;

/// One solver configuration of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub stencil: StencilKind,
    pub rule: QuadRule,
    /// Factoring radius around every source; `None` solves unfactored.
    pub r_fac: Option<f64>,
}

impl StudyConfig {
    pub fn new(stencil: StencilKind, rule: QuadRule, r_fac: Option<f64>) -> Self {
        StudyConfig { stencil, rule, r_fac }
    }

    pub fn label(&self) -> String {
        let base = format!("{}_{}", self.stencil, self.rule);
        match self.r_fac {
            Some(r) => format!("{base}_fac{}", (r * 1e4).round() / 1e4),
            None => base,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error: f64,
    pub seconds: f64,
    pub stats: SolveStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    /// Rows sorted by `n`.
    pub rows: Vec<ConvergenceRow>,
    /// `(C_E, beta)` for `error ~ C_E h^beta`.
    pub error_fit: Option<(f64, f64)>,
    /// `(C_T, alpha)` for `seconds ~ C_T N^alpha`.
    pub time_fit: Option<(f64, f64)>,
}

impl ConvergenceReport {
    fn from_rows(config: StudyConfig, mut rows: Vec<ConvergenceRow>) -> Self {
        rows.sort_by_key(|r| r.n);
        let col = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let error_fit = power_fit(&col(|r| r.h), &col(|r| r.error)).ok();
        let time_fit = power_fit(&col(|r| r.n as f64), &col(|r| r.seconds)).ok();
        ConvergenceReport { config, rows, error_fit, time_fit }
    }

    pub const CSV_HEADER: &'static str = "config,N,h,error,seconds,updates_attempted,updates_skipped,heap_ops";

    /// CSV rows (no header) followed by a comment row with the fits.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        let label = self.config.label();
        for r in &self.rows {
            let attempted = r.stats.line_attempted + r.stats.tri_attempted + r.stats.tet_attempted;
            let _ = writeln!(
                out,
                "{label},{},{:.16e},{:.16e},{:.16e},{attempted},{},{}",
                r.n,
                r.h,
                r.error,
                r.seconds,
                r.stats.skipped(),
                r.stats.heap_ops
            );
        }
        let fmt = |f: Option<(f64, f64)>| f.map_or("nan,nan".to_string(), |(c, p)| format!("{c:.16e},{p:.16e}"));
        let _ = writeln!(out, "# fit,{label},C_E,beta,{},C_T,alpha,{}", fmt(self.error_fit), fmt(self.time_fit));
        out
    }

    pub fn to_csv(reports: &[ConvergenceReport]) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in reports {
            out.push_str(&r.csv_rows());
        }
        out
    }
}

fn run_one(problem: &AnalyticProblem, config: &StudyConfig, n: usize) -> Result<ConvergenceRow, ProblemError> {
    let spec = problem.grid_spec(n)?;
    let grid = problem.slowness_grid(&spec)?;
    let boundary = problem.boundary(&spec)?;
    let mut solver = SolverConfig::new(config.stencil, config.rule);
    if let Some(r) = config.r_fac {
        solver = solver.with_factors(problem.factors(r)?);
    }
    let start = Instant::now();
    let sol = solve(&grid, &boundary, &solver)?;
    let seconds = start.elapsed().as_secs_f64();
    let exact = problem.exact_field(&spec)?;
    let exclude: Vec<usize> = boundary.iter().map(|b| b.0).collect();
    let error = rel_linf_error(&sol.values, &exact, &exclude)?;
    Ok(ConvergenceRow { n, h: spec.h, error, seconds, stats: sol.stats })
}

/// Solves `problem` for every configuration and grid size, measures the
/// relative l-infinity error against the exact solution (source nodes
/// excluded) and fits power laws. Up to `jobs` solves run concurrently.
pub fn convergence_study(
    problem: &AnalyticProblem,
    configs: &[StudyConfig],
    ns: &[usize],
    jobs: usize,
) -> Result<Vec<ConvergenceReport>, ProblemError> {
    if ns.is_empty() || ns.iter().any(|&n| n < 2) {
        return Err(ProblemError::Input(format!("grid sizes must be at least 2, got {ns:?}")));
    }
    if configs.is_empty() {
        return Err(ProblemError::Input("no solver configurations given".into()));
    }
    let tasks: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..ns.len()).map(move |k| (c, k))).collect();
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<Option<Result<ConvergenceRow, ProblemError>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(tasks.len()) {
            scope.spawn(|| loop {
                let t = {
                    let mut g = next.lock().unwrap();
                    let t = *g;
                    *g += 1;
                    t
                };
                let Some(&(c, k)) = tasks.get(t) else { break };
                let row = run_one(problem, &configs[c], ns[k]);
                results.lock().unwrap()[t] = Some(row);
            });
        }
    });
    let mut results = results.into_inner().unwrap().into_iter();
    let mut reports = Vec::new();
    for config in configs {
        let rows =
            (0..ns.len()).map(|_| results.next().flatten().expect("every task ran")).collect::<Result<Vec<_>, _>>()?;
        reports.push(ConvergenceReport::from_rows(config.clone(), rows));
    }
    Ok(reports)
}
