//! Single-simplex updates: cost functions, the closed-form minimizer, SQP,
//! the mp0 hybrid and skipping tests.
//!
//! A simplex update lives in shifted coordinates: the updated node is the
//! origin and the base vertices `p_0..p_d` are neighbor offsets. Barycentric
//! weights `lambda` parametrize `p_lambda = p_0 + dP lambda`.

mod cost;
mod exact;
mod skip;
mod sqp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(test)]
pub(crate) use cost::fd as cost_fd;
pub(crate) use cost::proj_hess;
pub use cost::{eval_f, eval_f0, eval_f1, CostEval, FCost, SimplexCost};
pub use exact::{finite_diff_value, mp0_update, solve_f0_exact, TOL_DELTA};
pub use skip::{causal_gap, kkt_multipliers, kkt_skippable, skip_zones};
pub use sqp::{project_to_simplex, solve_constrained, solve_constrained_cost, SqpOptions};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpdateError {
    #[error("p_lambda vanishes; cost is singular")]
    Singular,
    #[error("no characteristic reaches the simplex (radicand {radicand:e})")]
    NoCharacteristic { radicand: f64 },
    #[error("SQP did not converge in {iterations} iterations (best value {})", best.value)]
    NoConvergence { iterations: u32, best: Box<UpdateOutcome> },
    #[error("factored cost evaluated at the point source")]
    SourceSingularity,
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Quadrature rule of the discretized action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadRule {
    Rhr,
    Mp0,
    Mp1,
}

impl QuadRule {
    pub fn theta(self) -> f64 {
        match self {
            QuadRule::Rhr => 0.0,
            QuadRule::Mp0 | QuadRule::Mp1 => 0.5,
        }
    }

    /// Family minimized by the rule (mp0 minimizes F0 but reports F1).
    pub fn family(self) -> CostFamily {
        match self {
            QuadRule::Rhr | QuadRule::Mp0 => CostFamily::F0,
            QuadRule::Mp1 => CostFamily::F1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuadRule::Rhr => "rhr",
            QuadRule::Mp0 => "mp0",
            QuadRule::Mp1 => "mp1",
        }
    }
}

impl fmt::Display for QuadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuadRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rhr" => Ok(QuadRule::Rhr),
            "mp0" => Ok(QuadRule::Mp0),
            "mp1" => Ok(QuadRule::Mp1),
            _ => Err(format!("unknown quadrature rule '{s}' (expected rhr, mp0 or mp1)")),
        }
    }
}

/// `F0` averages slowness over the vertices once; `F1` interpolates it
/// along the base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostFamily {
    F0,
    F1,
}

/// Lower-dimensional sub-simplexes that need not be computed. Bit `m` is
/// set when the sub-simplex with vertex-index mask `m` is skippable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipMask(pub u8);

impl SkipMask {
    /// Every proper, nonempty sub-simplex of a `d`-simplex.
    pub fn all(d: usize) -> Self {
        let full = (1u8 << (d + 1)) - 1;
        let mut m = 0u8;
        for s in 1..full {
            m |= 1 << s;
        }
        SkipMask(m)
    }

    pub fn contains_mask(self, vertex_mask: u8) -> bool {
        vertex_mask < 8 && self.0 & (1 << vertex_mask) != 0
    }

    /// Whether the sub-simplex with the given vertex indices is skippable.
    pub fn skips(self, vertices: &[usize]) -> bool {
        self.contains_mask(vertices.iter().fold(0u8, |m, &i| m | (1 << i)))
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

/// Result of one simplex update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateOutcome {
    pub value: f64,
    pub d: usize,
    lambda: [f64; 2],
    /// Minimizer lies in the closed simplex (within [`TOL_DELTA`]).
    pub interior: bool,
    pub skip_mask: SkipMask,
    pub iterations: u32,
}

impl UpdateOutcome {
    pub fn new(value: f64, lambda: &[f64], interior: bool, skip_mask: SkipMask, iterations: u32) -> Self {
        let mut l = [0.0; 2];
        l[..lambda.len()].copy_from_slice(lambda);
        UpdateOutcome { value, d: lambda.len(), lambda: l, interior, skip_mask, iterations }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda[..self.d]
    }
}

/// One `(d+1)`-vertex update problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexUpdate {
    /// Spatial dimension (2 or 3).
    pub n: usize,
    pub d: usize,
    pub p: [Vec3; 3],
    pub u: [f64; 3],
    pub s: [f64; 3],
    pub s_hat: f64,
    pub h: f64,
    pub theta: f64,
}

impl SimplexUpdate {
    /// Checked constructor. Offsets must have sup-norm one and be linearly
    /// independent; slownesses must be positive and values finite.
    pub fn new(
        n: usize,
        p: &[Vec3],
        u: &[f64],
        s: &[f64],
        s_hat: f64,
        h: f64,
        theta: f64,
    ) -> Result<Self, UpdateError> {
        let k = p.len();
        if !(n == 2 || n == 3) || k == 0 || k > n || u.len() != k || s.len() != k {
            return Err(UpdateError::Contract(format!(
                "bad simplex shape: n={n}, {k} offsets, {} values, {} slownesses",
                u.len(),
                s.len()
            )));
        }
        for pi in p {
            let sup = pi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if (sup - 1.0).abs() > 1e-12 || (n == 2 && pi[2] != 0.0) {
                return Err(UpdateError::Contract(format!("offset {pi:?} must have sup-norm one")));
            }
        }
        if gram_det(p) <= 1e-12 {
            return Err(UpdateError::Contract("simplex offsets are linearly dependent".into()));
        }
        if s.iter().chain([&s_hat]).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(UpdateError::Contract("slowness must be positive".into()));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(UpdateError::Contract("vertex values must be finite".into()));
        }
        if !(h > 0.0) || !(0.0..=1.0).contains(&theta) {
            return Err(UpdateError::Contract(format!("bad h={h} or theta={theta}")));
        }
        Ok(Self::from_parts(n, p, u, s, s_hat, h, theta))
    }

    /// Unchecked constructor used by the marcher.
    #[inline]
    pub fn from_parts(n: usize, p: &[Vec3], u: &[f64], s: &[f64], s_hat: f64, h: f64, theta: f64) -> Self {
        let mut up = SimplexUpdate { n, d: p.len() - 1, p: [[0.0; 3]; 3], u: [0.0; 3], s: [0.0; 3], s_hat, h, theta };
        up.p[..p.len()].copy_from_slice(p);
        up.u[..p.len()].copy_from_slice(u);
        up.s[..p.len()].copy_from_slice(s);
        up
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        SimplexUpdate { theta, ..self.clone() }
    }

    #[inline]
    pub fn dp(&self, i: usize) -> Vec3 {
        sub(&self.p[i + 1], &self.p[0])
    }

    #[inline]
    pub fn p_lambda(&self, lambda: &[f64]) -> Vec3 {
        let mut x = self.p[0];
        for (i, l) in lambda.iter().enumerate() {
            let e = self.dp(i);
            for k in 0..3 {
                x[k] += l * e[k];
            }
        }
        x
    }

    /// Vertex-averaged slowness weight of `F0`.
    #[inline]
    pub fn s_theta(&self) -> f64 {
        let k = self.d + 1;
        let mean = self.s[..k].iter().sum::<f64>() / k as f64;
        (1.0 - self.theta) * self.s_hat + self.theta * mean
    }

    /// Interpolated slowness weight of `F1` at `lambda`.
    #[inline]
    pub fn s_theta_lambda(&self, lambda: &[f64]) -> f64 {
        let mut sl = self.s[0];
        for (i, l) in lambda.iter().enumerate() {
            sl += l * (self.s[i + 1] - self.s[0]);
        }
        (1.0 - self.theta) * self.s_hat + self.theta * sl
    }

    /// Sub-simplex on the given vertex indices.
    pub fn face(&self, vertices: &[usize]) -> SimplexUpdate {
        let mut p = [[0.0; 3]; 3];
        let mut u = [0.0; 3];
        let mut s = [0.0; 3];
        for (k, &i) in vertices.iter().enumerate() {
            p[k] = self.p[i];
            u[k] = self.u[i];
            s[k] = self.s[i];
        }
        let k = vertices.len();
        Self::from_parts(self.n, &p[..k], &u[..k], &s[..k], self.s_hat, self.h, self.theta)
    }

    /// Value of the single-vertex update from vertex `i`.
    pub fn line_value(&self, i: usize) -> f64 {
        let w = (1.0 - self.theta) * self.s_hat + self.theta * self.s[i];
        self.u[i] + w * self.h * norm(&self.p[i])
    }
}

fn gram_det(p: &[Vec3]) -> f64 {
    match p {
        [a] => dot(a, a),
        [a, b] => dot(a, a) * dot(b, b) - dot(a, b).powi(2),
        [a, b, c] => {
            let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
            det * det
        }
        _ => 0.0,
    }
}

/// Barycentric coordinates `(1 - sum(lambda), lambda_1, ..., lambda_d)`.
#[inline]
pub(crate) fn barycentric(lambda: &[f64]) -> [f64; 3] {
    let mut b = [0.0; 3];
    b[0] = 1.0 - lambda.iter().sum::<f64>();
    b[1..=lambda.len()].copy_from_slice(lambda);
    b
}

pub(crate) fn in_simplex(lambda: &[f64], tol: f64) -> bool {
    let b = barycentric(lambda);
    b[..=lambda.len()].iter().all(|&x| x >= -tol)
}
