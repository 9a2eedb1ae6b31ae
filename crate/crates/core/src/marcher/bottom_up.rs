use super::{Front, SolveStats, UpdateContext};
use crate::factoring::{GCost, PointSourceFactor};
use crate::updates::{eval_f, kkt_skippable, CostFamily, FCost, QuadRule, SimplexCost, SimplexUpdate};

/// Minimized cost of the rule, used by the KKT test.
fn with_cost<R>(
    ctx: &UpdateContext,
    up: &SimplexUpdate,
    factor: Option<&PointSourceFactor>,
    f: impl FnOnce(&dyn SimplexCost) -> R,
) -> R {
    let family = ctx.rule.family();
    match factor {
        Some(fac) => f(&GCost::new(up, fac, family)),
        None => f(&FCost { update: up, family }),
    }
}

/// Constrained triangle minimum `(value, lambda)` for the rule.
fn constrained_tri(
    ctx: &UpdateContext,
    up: &SimplexUpdate,
    factor: Option<&PointSourceFactor>,
    stats: &mut SolveStats,
) -> (f64, f64) {
    match ctx.minimize(up, factor) {
        Some((o, _)) if o.interior => (o.value, o.lambda()[0]),
        // F0 is convex: the constrained minimizer is the clamped
        // unconstrained one.
        Some((o, _)) => {
            let lam = o.lambda()[0].clamp(0.0, 1.0);
            (up.line_value(lam as usize), lam)
        }
        None if factor.is_none() && ctx.rule != QuadRule::Mp1 => {
            // No stationary point: the better endpoint of F0.
            stats.no_characteristic += 1;
            let f0 = |l: f64| eval_f(up, CostFamily::F0, &[l], 0).map_or(f64::INFINITY, |e| e.value);
            let lam = if f0(1.0) < f0(0.0) { 1.0 } else { 0.0 };
            (up.line_value(lam as usize), lam)
        }
        None => {
            stats.no_characteristic += 1;
            (f64::INFINITY, 0.0)
        }
    }
}

/// New candidate value of trial node `hat` after `p_new` became valid,
/// built greedily: the line from `p_new`, the best triangle among the
/// candidates adjacent to it, then tetrahedra on that triangle. With KKT
/// skipping on, a triangle or tetrahedron is skipped when the multipliers
/// of the lower-dimensional minimizer show it cannot improve on it.
pub fn update_bottom_up(ctx: &UpdateContext, front: &Front, hat: usize, p_new: usize, stats: &mut SolveStats) -> f64 {
    let Some(j0) = ctx.neighbor_of(hat, p_new) else { return f64::INFINITY };
    let st = &ctx.stencil;
    let mut nodes = [usize::MAX; 26];
    ctx.valid_neighbors(hat, &front.states, &mut nodes);
    if nodes[j0] == usize::MAX {
        return f64::INFINITY;
    }
    let factor = ctx.factor_at(hat);
    let factor = factor.as_ref();
    let values = &front.values;

    stats.line_attempted += 1;
    let line0 = ctx.simplex(hat, &[j0], &nodes, values).line_value(0);
    let mut best = line0;

    let mut chosen: Option<(f64, usize, f64)> = None;
    for &k in &st.bu_tri[j0] {
        let k = usize::from(k);
        if nodes[k] == usize::MAX {
            continue;
        }
        let up = ctx.simplex(hat, &[j0, k], &nodes, values);
        let skip = ctx.kkt_skip && with_cost(ctx, &up, factor, |c| kkt_skippable(c, &[0.0]).unwrap_or(false));
        let (value, lam) = if skip {
            stats.skipped_kkt += 1;
            (line0, 0.0)
        } else {
            stats.tri_attempted += 1;
            let (v, l) = constrained_tri(ctx, &up, factor, stats);
            // A minimizer on p_new is the line update itself.
            if l <= 0.0 {
                (line0, 0.0)
            } else {
                (v, l.min(1.0))
            }
        };
        best = best.min(value);
        if chosen.is_none_or(|c| value < c.0) {
            chosen = Some((value, k, lam));
        }
    }
    let Some((_, j1, lam1)) = chosen else { return best };

    for &m in &st.bu_tet[j0 * st.neighbors.len() + j1] {
        let m = usize::from(m);
        if nodes[m] == usize::MAX {
            continue;
        }
        let up = ctx.simplex(hat, &[j0, j1, m], &nodes, values);
        if ctx.kkt_skip && with_cost(ctx, &up, factor, |c| kkt_skippable(c, &[lam1, 0.0]).unwrap_or(false)) {
            stats.skipped_kkt += 1;
            continue;
        }
        stats.tet_attempted += 1;
        match ctx.minimize(&up, factor) {
            Some((o, _)) if o.interior => best = best.min(o.value),
            Some(_) => {}
            None => stats.no_characteristic += 1,
        }
    }
    best
}
