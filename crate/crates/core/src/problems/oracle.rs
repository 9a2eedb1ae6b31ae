use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::ProblemError;
use crate::grid::{NodeState, SlownessGrid};
use crate::updates::{eval_f, CostFamily, QuadRule, SimplexUpdate};

/// Minimum of the rule's cost over a regular barycentric lattice of the
/// simplex with spacing `resolution`. For mp0 the lattice minimizer of
/// `F0` is located and `F1` is reported there.
pub fn brute_force_simplex_min(u: &SimplexUpdate, rule: QuadRule, resolution: f64) -> Result<f64, ProblemError> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(ProblemError::Input(format!("resolution must be in (0, 1], got {resolution}")));
    }
    let u = u.with_theta(rule.theta());
    if u.d == 0 {
        return Ok(u.line_value(0));
    }
    let n = (1.0 / resolution).round() as usize;
    let family = rule.family();
    let cost = |l: &[f64]| eval_f(&u, family, l, 0).map_or(f64::INFINITY, |e| e.value);
    let mut best = (f64::INFINITY, [0.0; 2]);
    for i in 0..=n {
        let li = i as f64 / n as f64;
        if u.d == 1 {
            let v = cost(&[li]);
            if v < best.0 {
                best = (v, [li, 0.0]);
            }
            continue;
        }
        for j in 0..=(n - i) {
            let l = [li, j as f64 / n as f64];
            let v = cost(&l);
            if v < best.0 {
                best = (v, l);
            }
        }
    }
    if rule == QuadRule::Mp0 {
        return Ok(eval_f(&u, CostFamily::F1, &best.1[..u.d], 0).map_or(f64::INFINITY, |e| e.value));
    }
    Ok(best.0)
}

/// Classic fast marching with the upwind quadratic update on the axis
/// neighbors, written independently of the marcher. Uses the slowness at
/// the updated node.
pub fn classic_fmm(grid: &SlownessGrid, boundary: &[(usize, f64)]) -> Result<Vec<f64>, ProblemError> {
    let spec = grid.spec();
    let n = spec.num_nodes();
    let dim = spec.dim;
    let shape = spec.shape3();
    let mut u = vec![f64::INFINITY; n];
    let mut state = vec![NodeState::Far; n];
    let mut heap = BinaryHeap::new();
    if boundary.is_empty() {
        return Err(ProblemError::Input("boundary is empty".into()));
    }
    for &(i, v) in boundary {
        if i >= n || !(v >= 0.0 && v.is_finite()) {
            return Err(ProblemError::Input(format!("bad boundary node {i} with value {v}")));
        }
        u[i] = u[i].min(v);
        state[i] = NodeState::Trial;
    }
    for &(i, _) in boundary {
        heap.push(Reverse((u[i].to_bits(), i)));
    }
    let axis_neighbors = |i: usize, k: usize| -> [Option<usize>; 2] {
        let idx = spec.unravel3(i);
        let mut out = [None, None];
        if idx[k] > 0 {
            let mut j = idx;
            j[k] -= 1;
            out[0] = Some(spec.linear3(j));
        }
        if idx[k] + 1 < shape[k] {
            let mut j = idx;
            j[k] += 1;
            out[1] = Some(spec.linear3(j));
        }
        out
    };
    while let Some(Reverse((bits, i))) = heap.pop() {
        if state[i] == NodeState::Valid || bits != u[i].to_bits() {
            continue;
        }
        state[i] = NodeState::Valid;
        for k in 0..dim {
            for j in axis_neighbors(i, k).into_iter().flatten() {
                if state[j] == NodeState::Valid {
                    continue;
                }
                // Smallest valid neighbor value along each axis.
                let mut a: Vec<f64> = (0..dim)
                    .map(|m| {
                        axis_neighbors(j, m)
                            .into_iter()
                            .flatten()
                            .filter(|&q| state[q] == NodeState::Valid)
                            .map(|q| u[q])
                            .fold(f64::INFINITY, f64::min)
                    })
                    .filter(|v| v.is_finite())
                    .collect();
                a.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let sh = grid.at(j) * spec.h;
                let mut cand = a[0] + sh;
                let (mut sum, mut sum2) = (a[0], a[0] * a[0]);
                for m in 1..a.len() {
                    if cand <= a[m] {
                        break;
                    }
                    sum += a[m];
                    sum2 += a[m] * a[m];
                    let c = (m + 1) as f64;
                    let disc = sum * sum - c * (sum2 - sh * sh);
                    if disc < 0.0 {
                        break;
                    }
                    cand = (sum + disc.sqrt()) / c;
                }
                if cand < u[j] {
                    u[j] = cand;
                    state[j] = NodeState::Trial;
                    heap.push(Reverse((cand.to_bits(), j)));
                }
            }
        }
    }
    Ok(u)
}
