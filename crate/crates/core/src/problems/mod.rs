//! Analytic test problems, error metrics, oracles and convergence studies.

mod metrics;
mod oracle;
mod study;

pub use metrics::{downsample, power_fit, rel_linf_error};
pub use oracle::{brute_force_simplex_min, classic_fmm};
pub use study::{convergence_study, ConvergenceReport, ConvergenceRow, StudyConfig};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factoring::PointSourceFactor;
use crate::grid::{GridError, GridSpec, SlownessGrid};
use crate::marcher::SolveError;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("slowness at {x:?} is {s}, must be positive")]
    Domain { x: Vec<f64>, s: f64 },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    S1,
    S2,
    S3,
    S4,
    LinearSpeed,
    Constant,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 6] = [
        ProblemKind::S1,
        ProblemKind::S2,
        ProblemKind::S3,
        ProblemKind::S4,
        ProblemKind::LinearSpeed,
        ProblemKind::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::S1 => "s1",
            ProblemKind::S2 => "s2",
            ProblemKind::S3 => "s3",
            ProblemKind::S4 => "s4",
            ProblemKind::LinearSpeed => "linear_speed",
            ProblemKind::Constant => "constant",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s1" => Ok(ProblemKind::S1),
            "s2" => Ok(ProblemKind::S2),
            "s3" => Ok(ProblemKind::S3),
            "s4" => Ok(ProblemKind::S4),
            "linear_speed" | "linear-speed" => Ok(ProblemKind::LinearSpeed),
            "constant" | "const" => Ok(ProblemKind::Constant),
            _ => Err(format!("unknown problem '{s}' (expected s1, s2, s3, s4, linear_speed or constant)")),
        }
    }
}

/// Symmetric positive definite matrix shared by `s3` and `s4` (for `s4` it
/// is the square root of the metric).
pub const MATRIX_A: [[f64; 3]; 3] = [[1.0, 0.25, 0.125], [0.25, 1.0, 0.25], [0.125, 0.25, 1.0]];

/// Point-source problem with a closed-form solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticProblem {
    pub kind: ProblemKind,
    pub dim: usize,
    /// `MATRIX_A` (or its leading 2x2 block in 2D).
    pub a: [[f64; 3]; 3],
    pub alpha: f64,
    pub sources: Vec<Vec<f64>>,
    /// Slowness at the first source (linear speed only).
    pub s0: f64,
    /// Speed gradient (linear speed only).
    pub v: Vec<f64>,
}

impl AnalyticProblem {
    /// Problem with its standard parameters: a source at the origin of
    /// `[-1, 1]^dim`, or for the linear speed problem two sources at the
    /// origin and `(0.8, 0, ...)` on `[0, 1]^dim` with `s = 2` at the origin
    /// and `v = (1/2, 1/4, 1/8)`.
    pub fn new(kind: ProblemKind, dim: usize) -> Result<Self, ProblemError> {
        if !(dim == 2 || dim == 3) {
            return Err(ProblemError::Input(format!("dimension must be 2 or 3, got {dim}")));
        }
        let mut a = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in 0..dim {
                a[i][j] = MATRIX_A[i][j];
            }
        }
        let origin = vec![0.0; dim];
        let (sources, v) = match kind {
            ProblemKind::LinearSpeed => {
                let mut x2 = origin.clone();
                x2[0] = 0.8;
                (vec![origin, x2], [0.5, 0.25, 0.125][..dim].to_vec())
            }
            _ => (vec![origin], vec![0.0; dim]),
        };
        let p = AnalyticProblem { kind, dim, a, alpha: std::f64::consts::PI / 5.0, sources, s0: 2.0, v };
        p.check_positive()?;
        Ok(p)
    }

    /// Linear speed problem with custom sources, slowness at the first
    /// source and speed gradient.
    pub fn linear_speed(sources: Vec<Vec<f64>>, s0: f64, v: Vec<f64>) -> Result<Self, ProblemError> {
        let dim = v.len();
        let mut p = AnalyticProblem::new(ProblemKind::LinearSpeed, dim)?;
        if sources.is_empty() || sources.iter().any(|x| x.len() != dim) || !(s0 > 0.0) {
            return Err(ProblemError::Input("linear speed needs sources of matching dimension and s0 > 0".into()));
        }
        p.sources = sources;
        p.s0 = s0;
        p.v = v;
        p.check_positive()?;
        Ok(p)
    }

    /// Problem domain as `(lo, hi)` per axis.
    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            ProblemKind::LinearSpeed => (0.0, 1.0),
            _ => (-1.0, 1.0),
        }
    }

    /// Samples the domain and rejects a nonpositive slowness away from
    /// the sources.
    fn check_positive(&self) -> Result<(), ProblemError> {
        let (lo, hi) = self.domain();
        let m: usize = 9;
        let total = m.pow(self.dim as u32);
        for k in 0..total {
            let mut x = vec![0.0; self.dim];
            let mut r = k;
            for xi in x.iter_mut() {
                *xi = lo + (hi - lo) * (r % m) as f64 / (m - 1) as f64;
                r /= m;
            }
            if self.sources.iter().any(|src| src == &x) {
                continue;
            }
            self.eval(&x)?;
        }
        Ok(())
    }

    fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.a[i][j] * x[j]).sum()).collect()
    }

    /// Reciprocal of the linear speed slowness.
    fn speed(&self, x: &[f64]) -> f64 {
        let x1 = &self.sources[0];
        1.0 / self.s0 + self.v.iter().zip(x.iter().zip(x1)).map(|(v, (a, b))| v * (a - b)).sum::<f64>()
    }

    /// Exact solution and slowness at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, f64), ProblemError> {
        if x.len() != self.dim {
            return Err(ProblemError::Input(format!("point {x:?} is not {}-dimensional", self.dim)));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (u, s) = match self.kind {
            ProblemKind::S1 => (r.cos() + r - 1.0, 1.0 - r.sin()),
            ProblemKind::S2 => (r * r / 2.0, r),
            ProblemKind::S3 => {
                let sx: Vec<f64> = x.iter().map(|v| (self.alpha * v).sin()).collect();
                let cx: Vec<f64> = x.iter().map(|v| (self.alpha * v).cos()).collect();
                let a_s = self.mat_vec(&sx);
                // (A + A^T) S = 2 A S for symmetric A.
                let g: Vec<f64> = (0..self.dim).map(|i| self.alpha * cx[i] * 2.0 * a_s[i]).collect();
                (self.dot(&sx, &a_s), self.dot(&g, &g).sqrt())
            }
            ProblemKind::S4 => {
                let ax = self.mat_vec(x);
                (0.5 * self.dot(x, &ax), self.dot(&ax, &ax).sqrt())
            }
            ProblemKind::Constant => {
                let u = self
                    .sources
                    .iter()
                    .map(|src| x.iter().zip(src).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                    .fold(f64::INFINITY, f64::min);
                (u, 1.0)
            }
            ProblemKind::LinearSpeed => {
                let w = self.speed(x);
                let s = 1.0 / w;
                let vn = self.dot(&self.v, &self.v).sqrt();
                let u = self
                    .sources
                    .iter()
                    .map(|src| {
                        let si = 1.0 / self.speed(src);
                        let d2: f64 = x.iter().zip(src).map(|(a, b)| (a - b).powi(2)).sum();
                        if vn == 0.0 {
                            si * d2.sqrt()
                        } else {
                            (1.0 + 0.5 * si * s * vn * vn * d2).acosh() / vn
                        }
                    })
                    .fold(f64::INFINITY, f64::min);
                if !(w > 0.0) {
                    return Err(ProblemError::Domain { x: x.to_vec(), s });
                }
                (u, s)
            }
        };
        let at_source = self.sources.iter().any(|src| src.as_slice() == x);
        if !(s > 0.0 && s.is_finite()) && !(at_source && s == 0.0) {
            return Err(ProblemError::Domain { x: x.to_vec(), s });
        }
        Ok((u, s))
    }

    /// Uniform `n^dim` grid over the problem domain.
    pub fn grid_spec(&self, n: usize) -> Result<GridSpec, ProblemError> {
        let (lo, hi) = self.domain();
        Ok(GridSpec::cube(self.dim, n, lo, hi)?)
    }

    /// Cached slowness on the grid. A slowness that vanishes exactly at a
    /// source node is replaced by the smallest positive double, which only
    /// enters the updates through the vertex weight of that node.
    pub fn slowness_grid(&self, spec: &GridSpec) -> Result<SlownessGrid, ProblemError> {
        let mut s = Vec::with_capacity(spec.num_nodes());
        for i in 0..spec.num_nodes() {
            let x = spec.coord3(i);
            let (_, si) = self.eval(&x[..spec.dim])?;
            s.push(if si == 0.0 { f64::MIN_POSITIVE } else { si });
        }
        Ok(SlownessGrid::new(spec.clone(), s)?)
    }

    /// Exact solution at every node.
    pub fn exact_field(&self, spec: &GridSpec) -> Result<Vec<f64>, ProblemError> {
        (0..spec.num_nodes())
            .map(|i| {
                let x = spec.coord3(i);
                Ok(self.eval(&x[..spec.dim])?.0)
            })
            .collect()
    }

    /// Source nodes (nearest grid node to each source) with their exact
    /// values as boundary data.
    pub fn boundary(&self, spec: &GridSpec) -> Result<Vec<(usize, f64)>, ProblemError> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for src in &self.sources {
            let (node, _) = spec.nearest_node(src)?;
            let x = spec.coord3(node);
            let u = self.eval(&x[..spec.dim])?.0;
            if !out.iter().any(|b| b.0 == node) {
                out.push((node, u));
            }
        }
        Ok(out)
    }

    /// Exact slowness at each source.
    pub fn source_slowness(&self) -> Result<Vec<f64>, ProblemError> {
        self.sources.iter().map(|x| Ok(self.eval(x)?.1)).collect()
    }

    /// One factor per source with the given radius.
    pub fn factors(&self, r_fac: f64) -> Result<Vec<PointSourceFactor>, ProblemError> {
        self.sources
            .iter()
            .zip(self.source_slowness()?)
            .map(|(x, s)| PointSourceFactor::new(x.clone(), s, r_fac).map_err(|e| ProblemError::Input(e.to_string())))
            .collect()
    }
}
