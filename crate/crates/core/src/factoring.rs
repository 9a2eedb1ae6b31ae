//! Additive factoring near point sources.
//!
//! Close to a source the solution behaves like `T(x) = s0 |x - x0|`, which
//! the piecewise-linear interpolation of a plain update resolves poorly.
//! Factored updates interpolate `tau = U - T` instead and add `T` back
//! exactly.

use serde::{Deserialize, Serialize};

use crate::updates::{
    dot, norm, solve_constrained_cost, sub, CostEval, CostFamily, QuadRule, SimplexCost, SimplexUpdate, SkipMask,
    SqpOptions, UpdateError, UpdateOutcome, Vec3,
};
use crate::updates::{eval_f, project_to_simplex, solve_f0_exact};

/// A point source used for factoring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSourceFactor {
    /// Physical source coordinate.
    pub x_src: Vec<f64>,
    /// Source position in the shifted frame of the current update.
    #[serde(skip)]
    pub p_src: Vec3,
    /// Slowness at the source.
    pub s_src: f64,
    pub r_fac: f64,
}

impl PointSourceFactor {
    pub fn new(x_src: Vec<f64>, s_src: f64, r_fac: f64) -> Result<Self, UpdateError> {
        // Zero is allowed: slowness may vanish at a source, and then T = 0.
        if !(s_src >= 0.0 && s_src.is_finite()) {
            return Err(UpdateError::Contract(format!("source slowness must be nonnegative, got {s_src}")));
        }
        if !(r_fac >= 0.0) {
            return Err(UpdateError::Contract(format!("factoring radius must be nonnegative, got {r_fac}")));
        }
        Ok(PointSourceFactor { x_src, p_src: [0.0; 3], s_src, r_fac })
    }

    /// The same source seen from node `x_hat` on a grid of spacing `h`.
    pub fn shifted(&self, x_hat: &[f64], h: f64) -> PointSourceFactor {
        let mut p = [0.0; 3];
        for (k, pk) in p.iter_mut().enumerate().take(x_hat.len()) {
            *pk = (self.x_src[k] - x_hat[k]) / h;
        }
        PointSourceFactor { p_src: p, ..self.clone() }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.x_src).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Whether the node at `x_node` lies within the factoring radius.
pub fn is_factored(x_node: &[f64], f: &PointSourceFactor) -> bool {
    f.distance(x_node) <= f.r_fac
}

/// `T` at vertex `i` of the update in the source's shifted frame.
fn t_vertex(u: &SimplexUpdate, f: &PointSourceFactor, i: usize) -> f64 {
    f.s_src * u.h * norm(&sub(&u.p[i], &f.p_src))
}

/// `tau_i = U_i - T_i` for every vertex.
pub fn tau(u: &SimplexUpdate, f: &PointSourceFactor) -> [f64; 3] {
    let mut t = [0.0; 3];
    for (i, ti) in t.iter_mut().enumerate().take(u.d + 1) {
        *ti = u.u[i] - t_vertex(u, f, i);
    }
    t
}

/// Factored cost from its parts: the base cost evaluated with `tau` in
/// place of `U`, plus `s0 h |p_lambda - p0|` when a source is given.
///
/// With `source = None` and `tau = U` this is exactly the unfactored cost.
/// At the source itself the `T` term has no derivative; `at_source_zero`
/// selects a zero subgradient instead of an error.
pub fn eval_g_parts(
    u: &SimplexUpdate,
    tau: &[f64; 3],
    source: Option<(Vec3, f64)>,
    family: CostFamily,
    lambda: &[f64],
    order: u8,
    at_source_zero: bool,
) -> Result<CostEval, UpdateError> {
    let mut shifted = u.clone();
    shifted.u = *tau;
    let mut ev = eval_f(&shifted, family, lambda, order)?;
    let Some((p_src, s_src)) = source else { return Ok(ev) };
    let q = sub(&u.p_lambda(lambda), &p_src);
    let qn = norm(&q);
    let c = s_src * u.h;
    ev.value += c * qn;
    if order == 0 || u.d == 0 {
        return Ok(ev);
    }
    if qn == 0.0 {
        if at_source_zero {
            return Ok(ev);
        }
        return Err(UpdateError::SourceSingularity);
    }
    let nu = q.map(|x| x / qn);
    for i in 0..u.d {
        ev.grad[i] += c * dot(&u.dp(i), &nu);
    }
    if order >= 2 {
        let ht = crate::updates::proj_hess(u, &q, qn, c);
        for i in 0..u.d {
            for j in 0..u.d {
                ev.hess[i][j] += ht[i][j];
            }
        }
    }
    Ok(ev)
}

/// `G0` or `G1` of a simplex update factored around `f` (already shifted).
pub fn eval_g(
    u: &SimplexUpdate,
    f: &PointSourceFactor,
    family: CostFamily,
    lambda: &[f64],
    order: u8,
) -> Result<CostEval, UpdateError> {
    eval_g_parts(u, &tau(u, f), Some((f.p_src, f.s_src)), family, lambda, order, false)
}

/// Factored cost as seen by the SQP solver.
pub struct GCost<'a> {
    pub update: &'a SimplexUpdate,
    pub tau: [f64; 3],
    pub p_src: Vec3,
    pub s_src: f64,
    pub family: CostFamily,
}

impl<'a> GCost<'a> {
    pub fn new(update: &'a SimplexUpdate, f: &PointSourceFactor, family: CostFamily) -> Self {
        GCost { update, tau: tau(update, f), p_src: f.p_src, s_src: f.s_src, family }
    }
}

impl SimplexCost for GCost<'_> {
    fn d(&self) -> usize {
        self.update.d
    }

    fn eval(&self, lambda: &[f64], order: u8) -> Result<CostEval, UpdateError> {
        eval_g_parts(self.update, &self.tau, Some((self.p_src, self.s_src)), self.family, lambda, order, true)
    }
}

/// Constrained minimum of the factored cost for the given rule. The
/// update's `theta` must match the rule. mp0 minimizes `G0` and reports
/// `G1` at the minimizer.
pub fn solve_factored(u: &SimplexUpdate, f: &PointSourceFactor, rule: QuadRule) -> Result<UpdateOutcome, UpdateError> {
    if u.d == 0 {
        return Ok(UpdateOutcome::new(u.line_value(0), &[], true, SkipMask::default(), 0));
    }
    let start = match solve_f0_exact(u) {
        Ok(o) => project_to_simplex(o.lambda()),
        Err(_) => {
            let c = 1.0 / (u.d + 1) as f64;
            [c, if u.d == 2 { c } else { 0.0 }]
        }
    };
    let cost = GCost::new(u, f, rule.family());
    let mut out = match solve_constrained_cost(&cost, &start[..u.d], SqpOptions::default()) {
        Ok(o) => o,
        Err(UpdateError::NoConvergence { iterations, best }) if rule != QuadRule::Mp0 => {
            return Err(UpdateError::NoConvergence { iterations, best })
        }
        Err(UpdateError::NoConvergence { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    if rule == QuadRule::Mp0 {
        out.value = GCost::new(u, f, CostFamily::F1).eval(out.lambda(), 0)?.value;
    }
    Ok(out)
}
