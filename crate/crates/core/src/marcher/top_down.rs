use super::{Front, SolveStats, UpdateContext};

const MAX_TRIS: usize = 32;

#[derive(Clone, Copy, PartialEq)]
enum Removed {
    No,
    Visibility,
    Constrained,
}

impl Removed {
    fn count(self, stats: &mut SolveStats) {
        match self {
            Removed::Visibility => stats.skipped_visibility += 1,
            Removed::Constrained => stats.skipped_constrained += 1,
            Removed::No => {}
        }
    }
}

/// New candidate value of trial node `hat` after its neighbor `p_new`
/// became valid, using every update simplex that contains `p_new`.
///
/// Simplexes are visited from the highest dimension down. With skipping on,
/// a closed-form minimizer removes the lower-dimensional simplexes it can
/// see past, and a constrained minimizer removes all of its faces.
pub fn update_top_down(ctx: &UpdateContext, front: &Front, hat: usize, p_new: usize, stats: &mut SolveStats) -> f64 {
    let Some(jn) = ctx.neighbor_of(hat, p_new) else { return f64::INFINITY };
    let st = &ctx.stencil;
    let mut nodes = [usize::MAX; 26];
    ctx.valid_neighbors(hat, &front.states, &mut nodes);
    if nodes[jn] == usize::MAX {
        return f64::INFINITY;
    }
    let valid = |j: u8| nodes[j as usize] != usize::MAX;
    let factor = ctx.factor_at(hat);
    let values = &front.values;

    let tris_here = &st.tris_of[jn];
    debug_assert!(tris_here.len() <= MAX_TRIS);
    let mut tri_removed = [Removed::No; MAX_TRIS];
    let mut line_removed = Removed::No;
    let mut best = f64::INFINITY;

    if ctx.spec.dim == 3 {
        for &t in &st.tets_of[jn] {
            let verts = st.tets[t as usize];
            if !verts.iter().all(|&v| valid(v)) {
                continue;
            }
            stats.tet_attempted += 1;
            let vs = verts.map(usize::from);
            let up = ctx.simplex(hat, &vs, &nodes, values);
            let Some((out, closed_form)) = ctx.minimize(&up, factor.as_ref()) else {
                stats.no_characteristic += 1;
                continue;
            };
            if out.interior {
                best = best.min(out.value);
            }
            if !ctx.skip {
                continue;
            }
            let kind = if closed_form { Removed::Visibility } else { Removed::Constrained };
            for (face, mask) in st.tet_faces[t as usize].iter().zip([0b011u8, 0b101, 0b110]) {
                if !out.skip_mask.contains_mask(mask) {
                    continue;
                }
                if let Some(pos) = tris_here.iter().position(|x| x == face) {
                    if tri_removed[pos] == Removed::No {
                        tri_removed[pos] = kind;
                    }
                }
            }
            let k = vs.iter().position(|&v| v == jn).expect("tet contains p_new");
            if out.skip_mask.contains_mask(1 << k) && line_removed == Removed::No {
                line_removed = kind;
            }
        }
    }

    for (pos, &t) in tris_here.iter().enumerate() {
        let verts = st.tris[t as usize];
        if !verts.iter().all(|&v| valid(v)) {
            continue;
        }
        if tri_removed[pos] != Removed::No {
            tri_removed[pos].count(stats);
            continue;
        }
        stats.tri_attempted += 1;
        let vs = verts.map(usize::from);
        let up = ctx.simplex(hat, &vs, &nodes, values);
        let Some((out, closed_form)) = ctx.minimize(&up, factor.as_ref()) else {
            stats.no_characteristic += 1;
            continue;
        };
        if out.interior {
            best = best.min(out.value);
        }
        if !ctx.skip {
            continue;
        }
        let k = vs.iter().position(|&v| v == jn).expect("triangle contains p_new");
        if out.skip_mask.contains_mask(1 << k) && line_removed == Removed::No {
            line_removed = if closed_form { Removed::Visibility } else { Removed::Constrained };
        }
    }

    if line_removed != Removed::No {
        line_removed.count(stats);
    } else {
        stats.line_attempted += 1;
        best = best.min(ctx.simplex(hat, &[jn], &nodes, values).line_value(0));
    }
    best
}
