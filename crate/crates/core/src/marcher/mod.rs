//! Dijkstra-like marching driver.

mod bottom_up;
mod heap;
mod top_down;

pub use bottom_up::update_bottom_up;
pub use heap::{Front, FrontError};
pub use top_down::update_top_down;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factoring::{solve_factored, PointSourceFactor};
use crate::grid::{GridSpec, GroupSelection, NodeState, SlownessGrid, Stencil, StencilKind};
use crate::updates::{
    mp0_update, solve_constrained, solve_f0_exact, CostFamily, QuadRule, SimplexUpdate, UpdateError, UpdateOutcome,
    Vec3,
};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("boundary is empty")]
    EmptyBoundary,
    #[error("boundary node {0} is out of bounds")]
    BoundaryOutOfBounds(usize),
    #[error("boundary value {value} at node {node} must be finite and nonnegative")]
    BadBoundaryValue { node: usize, value: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Front(#[from] FrontError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    TopDown,
    BottomUp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub stencil: StencilKind,
    pub rule: QuadRule,
    /// Update groups for the 3D top-down stencils; `None` uses the stencil's
    /// default groups.
    pub groups: Option<GroupSelection>,
    /// Point sources to factor around. Each node uses the nearest source
    /// whose radius covers it.
    pub factors: Vec<PointSourceFactor>,
    /// Top-down: drop lower-dimensional updates made redundant by a
    /// higher-dimensional minimizer.
    pub skip: bool,
    /// Bottom-up: skip updates whose KKT multipliers show no improvement.
    pub kkt_skip: bool,
}

impl SolverConfig {
    pub fn new(stencil: StencilKind, rule: QuadRule) -> Self {
        SolverConfig { stencil, rule, groups: None, factors: Vec::new(), skip: true, kkt_skip: true }
    }

    pub fn with_factors(mut self, factors: Vec<PointSourceFactor>) -> Self {
        self.factors = factors;
        self
    }

    pub fn algorithm(&self) -> Algorithm {
        if self.stencil.is_bottom_up() {
            Algorithm::BottomUp
        } else {
            Algorithm::TopDown
        }
    }

    pub fn build_stencil(&self) -> Stencil {
        match &self.groups {
            Some(g) => Stencil::with_groups(self.stencil, g.clone()),
            None => Stencil::new(self.stencil),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub line_attempted: u64,
    pub tri_attempted: u64,
    pub tet_attempted: u64,
    /// Updates removed by a higher-dimensional unconstrained minimizer.
    pub skipped_visibility: u64,
    /// Updates removed by a higher-dimensional constrained minimizer.
    pub skipped_constrained: u64,
    /// Bottom-up updates skipped by the KKT test.
    pub skipped_kkt: u64,
    /// Updates with no characteristic through the base.
    pub no_characteristic: u64,
    pub heap_ops: u64,
    /// Number of accepted nodes.
    pub accepted: u64,
    /// Largest drop of an accepted value below an earlier accepted value.
    pub max_monotone_violation: f64,
}

impl SolveStats {
    pub fn skipped(&self) -> u64 {
        self.skipped_visibility + self.skipped_constrained + self.skipped_kkt
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub stats: SolveStats,
    pub config: SolverConfig,
}

const NO_FACTOR: u16 = u16::MAX;

/// Read-only data shared by all updates of one solve.
pub struct UpdateContext<'a> {
    pub spec: &'a GridSpec,
    pub slowness: &'a [f64],
    pub stencil: Stencil,
    pub rule: QuadRule,
    pub skip: bool,
    pub kkt_skip: bool,
    factors: Vec<PointSourceFactor>,
    factor_of: Vec<u16>,
    offsets: Vec<Vec3>,
    /// Neighbor index by `(dx+1)*9 + (dy+1)*3 + (dz+1)`.
    lookup: [u8; 27],
}

const NO_NEIGHBOR: u8 = u8::MAX;

fn lookup_key(d: [isize; 3]) -> Option<usize> {
    if d.iter().any(|v| v.abs() > 1) {
        return None;
    }
    Some(((d[0] + 1) * 9 + (d[1] + 1) * 3 + (d[2] + 1)) as usize)
}

impl<'a> UpdateContext<'a> {
    pub fn new(grid: &'a SlownessGrid, config: &SolverConfig) -> Result<Self, SolveError> {
        let spec = grid.spec();
        if config.stencil.dim() != spec.dim {
            return Err(SolveError::Config(format!(
                "stencil {} is {}D but the grid is {}D",
                config.stencil.name(),
                config.stencil.dim(),
                spec.dim
            )));
        }
        for f in &config.factors {
            if f.x_src.len() != spec.dim {
                return Err(SolveError::Config(format!("factor source {:?} has the wrong dimension", f.x_src)));
            }
        }
        let stencil = config.build_stencil();
        let offsets = stencil.neighbors.iter().map(|o| o.map(f64::from)).collect();
        let mut lookup = [NO_NEIGHBOR; 27];
        for (j, o) in stencil.neighbors.iter().enumerate() {
            let key = lookup_key(o.map(isize::from)).expect("unit offsets");
            lookup[key] = j as u8;
        }
        let mut factor_of = vec![NO_FACTOR; spec.num_nodes()];
        if !config.factors.is_empty() {
            for (node, slot) in factor_of.iter_mut().enumerate() {
                let x = spec.coord3(node);
                let x = &x[..spec.dim];
                let mut best = (f64::INFINITY, NO_FACTOR);
                for (i, f) in config.factors.iter().enumerate() {
                    let r = f.distance(x);
                    if r <= f.r_fac && r < best.0 {
                        best = (r, i as u16);
                    }
                }
                *slot = best.1;
            }
        }
        Ok(UpdateContext {
            spec,
            slowness: grid.values(),
            stencil,
            rule: config.rule,
            skip: config.skip,
            kkt_skip: config.kkt_skip,
            factors: config.factors.clone(),
            factor_of,
            offsets,
            lookup,
        })
    }

    /// Stencil index of the offset from `hat` to `node`.
    pub fn neighbor_of(&self, hat: usize, node: usize) -> Option<usize> {
        let a = self.spec.unravel3(hat);
        let b = self.spec.unravel3(node);
        let d = [0, 1, 2].map(|k| b[k] as isize - a[k] as isize);
        let j = self.lookup[lookup_key(d)?];
        (j != NO_NEIGHBOR).then_some(j as usize)
    }

    /// Linear indices of the valid stencil neighbors of `hat`
    /// (`usize::MAX` where absent or not valid).
    fn valid_neighbors(&self, hat: usize, states: &[NodeState], out: &mut [usize; 26]) {
        let idx = self.spec.unravel3(hat);
        for (j, o) in self.stencil.neighbors.iter().enumerate() {
            out[j] = match self.spec.offset_node(idx, *o) {
                Some(n) if states[n] == NodeState::Valid => n,
                _ => usize::MAX,
            };
        }
    }

    /// Factor in the shifted frame of `hat`, if `hat` is factored.
    fn factor_at(&self, hat: usize) -> Option<PointSourceFactor> {
        let i = self.factor_of[hat];
        if i == NO_FACTOR {
            return None;
        }
        let x = self.spec.coord3(hat);
        Some(self.factors[i as usize].shifted(&x[..self.spec.dim], self.spec.h))
    }

    fn simplex(&self, hat: usize, verts: &[usize], nodes: &[usize; 26], values: &[f64]) -> SimplexUpdate {
        let mut p = [[0.0; 3]; 3];
        let mut u = [0.0; 3];
        let mut s = [0.0; 3];
        for (k, &j) in verts.iter().enumerate() {
            p[k] = self.offsets[j];
            u[k] = values[nodes[j]];
            s[k] = self.slowness[nodes[j]];
        }
        let k = verts.len();
        SimplexUpdate::from_parts(
            self.spec.dim,
            &p[..k],
            &u[..k],
            &s[..k],
            self.slowness[hat],
            self.spec.h,
            self.rule.theta(),
        )
    }

    /// Rule-specific minimization. Closed-form results may be exterior;
    /// constrained results always lie in the simplex. Returns `None` when
    /// no characteristic reaches the base.
    fn minimize(&self, up: &SimplexUpdate, factor: Option<&PointSourceFactor>) -> Option<(UpdateOutcome, bool)> {
        let res = match (factor, self.rule) {
            (None, QuadRule::Rhr) => return solve_f0_exact(up).ok().map(|o| (o, true)),
            (None, QuadRule::Mp0) => return mp0_update(up).ok().map(|o| (o, true)),
            (None, QuadRule::Mp1) => solve_constrained(up, CostFamily::F1, None),
            (Some(f), rule) => solve_factored(up, f, rule),
        };
        match res {
            Ok(o) => Some((o, false)),
            Err(UpdateError::NoConvergence { best, .. }) => Some((*best, false)),
            Err(_) => None,
        }
    }
}

/// Runs the marching loop from the given boundary values.
pub fn solve(grid: &SlownessGrid, boundary: &[(usize, f64)], config: &SolverConfig) -> Result<Solution, SolveError> {
    let ctx = UpdateContext::new(grid, config)?;
    let spec = grid.spec();
    let n = spec.num_nodes();
    if boundary.is_empty() {
        return Err(SolveError::EmptyBoundary);
    }
    let mut front = Front::new(n);
    for &(node, value) in boundary {
        if node >= n {
            return Err(SolveError::BoundaryOutOfBounds(node));
        }
        if !(value.is_finite() && value >= 0.0) {
            return Err(SolveError::BadBoundaryValue { node, value });
        }
        if front.contains(node) {
            if value < front.values[node] {
                front.decrease(node, value)?;
            }
        } else {
            front.push(node, value)?;
        }
    }

    let mut stats = SolveStats::default();
    let bottom_up = config.algorithm() == Algorithm::BottomUp;
    let mut running_max = f64::NEG_INFINITY;
    while let Some(p_new) = front.pop_min() {
        let v = front.values[p_new];
        stats.accepted += 1;
        stats.max_monotone_violation = stats.max_monotone_violation.max(running_max - v);
        running_max = running_max.max(v);

        let idx = spec.unravel3(p_new);
        for o in &ctx.stencil.neighbors {
            let Some(hat) = spec.offset_node(idx, *o) else { continue };
            if front.states[hat] == NodeState::Valid {
                continue;
            }
            let cand = if bottom_up {
                update_bottom_up(&ctx, &front, hat, p_new, &mut stats)
            } else {
                update_top_down(&ctx, &front, hat, p_new, &mut stats)
            };
            if front.states[hat] == NodeState::Far {
                front.push(hat, cand)?;
            } else if cand < front.values[hat] {
                front.decrease(hat, cand)?;
            }
        }
    }
    stats.heap_ops = front.ops;
    Ok(Solution { spec: spec.clone(), values: front.values, stats, config: config.clone() })
}

#[cfg(test)]
mod tests;
