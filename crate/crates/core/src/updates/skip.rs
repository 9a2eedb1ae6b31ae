use super::{barycentric, dot, norm, SimplexCost, SkipMask, UpdateError, UpdateOutcome, Vec3, TOL_DELTA};

/// Sub-simplexes made redundant by an unconstrained minimizer.
///
/// Face `k` (opposite vertex `k`) is visible from `lambda*` when the `k`-th
/// barycentric coordinate is negative. A sub-simplex can be skipped when it
/// does not lie inside any visible face, i.e. it contains every vertex whose
/// opposite face is visible. An interior minimizer skips everything.
pub fn skip_zones(outcome: &UpdateOutcome, d: usize) -> SkipMask {
    if d == 0 {
        return SkipMask::default();
    }
    let b = barycentric(outcome.lambda());
    let visible = (0..=d).filter(|&k| b[k] < -TOL_DELTA).fold(0u8, |m, k| m | (1 << k));
    let full = (1u8 << (d + 1)) - 1;
    let mut mask = 0u8;
    for s in 1..full {
        if s & visible == visible {
            mask |= 1 << s;
        }
    }
    SkipMask(mask)
}

/// Lagrange multipliers of the active constraints at a boundary point.
///
/// Constraints are `-lambda_i <= 0` and `sum(lambda) <= 1`; the multipliers
/// solve `grad F + A_I^T mu = 0` (least squares when fewer constraints than
/// dimensions are active). Returns the multipliers of the active set in the
/// order: `lambda_1 = 0`, ..., `lambda_d = 0`, `sum = 1`.
pub fn kkt_multipliers(cost: &dyn SimplexCost, lambda: &[f64]) -> Result<Vec<f64>, UpdateError> {
    let d = cost.d();
    if lambda.len() != d || d == 0 {
        return Err(UpdateError::Contract(format!("expected {d} barycentric weights")));
    }
    let tol = 1e-12;
    let b = barycentric(lambda);
    if b[..=d].iter().any(|&x| x < -tol) {
        return Err(UpdateError::Contract(format!("{lambda:?} lies outside the simplex")));
    }
    let mut rows: Vec<[f64; 2]> = Vec::new();
    for i in 0..d {
        if lambda[i].abs() <= tol {
            let mut r = [0.0; 2];
            r[i] = -1.0;
            rows.push(r);
        }
    }
    if b[0].abs() <= tol {
        rows.push([1.0, if d == 2 { 1.0 } else { 0.0 }]);
    }
    if rows.is_empty() {
        return Err(UpdateError::Contract(format!("{lambda:?} is not on a face of the simplex")));
    }
    let g = cost.eval(lambda, 1)?.grad;
    match rows.len() {
        1 => {
            let a = rows[0];
            let aa = a[0] * a[0] + a[1] * a[1];
            Ok(vec![-(a[0] * g[0] + a[1] * g[1]) / aa])
        }
        _ => {
            // Two active rows in 2D: a vertex of the triangle.
            let (a, c) = (rows[0], rows[1]);
            let det = a[0] * c[1] - a[1] * c[0];
            let m0 = (-g[0] * c[1] + g[1] * c[0]) / det;
            let m1 = (-a[0] * g[1] + a[1] * g[0]) / det;
            Ok(vec![m0, m1])
        }
    }
}

/// Whether the full update cannot improve on the face minimizer `lambda`:
/// all active-constraint multipliers are nonnegative.
pub fn kkt_skippable(cost: &dyn SimplexCost, lambda: &[f64]) -> Result<bool, UpdateError> {
    Ok(kkt_multipliers(cost, lambda)?.iter().all(|&m| m >= 0.0))
}

/// Geometric update gap `min_{i,j} p_i . p_j / |p_j|`. A simplex is causal
/// for `F0` when this is nonnegative.
pub fn causal_gap(offsets: &[Vec3]) -> f64 {
    let mut gap = f64::INFINITY;
    for pi in offsets {
        for pj in offsets {
            gap = gap.min(dot(pi, pj) / norm(pj));
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::super::testing::random_update;
    use super::super::{eval_f, solve_constrained, CostFamily, FCost, SimplexUpdate};
    use super::*;
    use rand::{Rng, SeedableRng};

    fn outcome(l: &[f64]) -> UpdateOutcome {
        UpdateOutcome::new(0.0, l, false, SkipMask::default(), 0)
    }

    #[test]
    fn zones() {
        assert_eq!(skip_zones(&outcome(&[1.0 / 3.0, 1.0 / 3.0]), 2).count(), 6);
        assert_eq!(skip_zones(&outcome(&[0.5]), 1), SkipMask::all(1));
        // Beyond the far edge: the far edge and both of its vertices remain.
        let m = skip_zones(&outcome(&[0.6, 0.6]), 2);
        let edges_skipped = [[0, 1], [0, 2], [1, 2]].iter().filter(|e| m.skips(&e[..])).count();
        assert_eq!(edges_skipped, 2);
        assert!(!m.skips(&[1, 2]) && !m.skips(&[1]) && !m.skips(&[2]));
        assert!(m.skips(&[0]));
        // Beyond vertex 1 (two faces visible): only the opposite edge goes.
        let m = skip_zones(&outcome(&[1.5, -0.2]), 2);
        assert_eq!(m.count(), 1);
        assert!(m.skips(&[0, 2]));
        // Exterior in 1D: the far vertex is skipped.
        let m = skip_zones(&outcome(&[-0.3]), 1);
        assert!(!m.skips(&[0]) && m.skips(&[1]));
    }

    #[test]
    fn gaps() {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((causal_gap(&[[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]]) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(causal_gap(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]), 0.0);
        assert_eq!(causal_gap(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), 0.0);
        assert!((causal_gap(&[[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 1.0]]) - s2).abs() < 1e-15);
    }

    #[test]
    fn kkt_signs_in_one_dimension() {
        // F decreasing into the segment from vertex 0: not skippable.
        let u = SimplexUpdate::new(2, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[0.0, 0.0], &[1.0, 1.0], 1.0, 1.0, 0.0)
            .unwrap();
        let c = FCost { update: &u, family: CostFamily::F0 };
        assert!(!kkt_skippable(&c, &[0.0]).unwrap());
        let u = SimplexUpdate::new(2, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[0.0, 1.2], &[1.0, 1.0], 1.0, 1.0, 0.0)
            .unwrap();
        let c = FCost { update: &u, family: CostFamily::F0 };
        assert!(kkt_skippable(&c, &[0.0]).unwrap());
        assert!(kkt_multipliers(&c, &[0.5]).is_err());
        assert!(kkt_multipliers(&c, &[-0.5]).is_err());
    }

    /// Brute force: a face minimizer passes the KKT test iff the dense-grid
    /// minimum over the whole triangle is no better than the face minimum.
    /// Uses costs whose face restriction is the face cost (rhr F0 and F1).
    #[test]
    fn kkt_agrees_with_dense_grid() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(31);
        let mut decided = 0;
        let mut total = 0;
        while total < 500 {
            let (family, theta) = if rng.gen_bool(0.5) { (CostFamily::F0, 0.0) } else { (CostFamily::F1, 0.5) };
            let u = random_update(&mut rng, 3, 2, theta, true);
            let Ok(fm) = solve_constrained(&u.face(&[0, 1]), family, None) else { continue };
            let lam = [fm.lambda()[0], 0.0];
            let cost = FCost { update: &u, family };
            let skip = kkt_skippable(&cost, &lam).unwrap();
            let n = 400;
            let mut grid_min = f64::INFINITY;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let l = [i as f64 / n as f64, j as f64 / n as f64];
                    grid_min = grid_min.min(eval_f(&u, family, &l, 0).unwrap().value);
                }
            }
            total += 1;
            let full = solve_constrained(&u, family, None).unwrap();
            // Near ties are not decidable on a grid of this resolution.
            if fm.value - full.value < 1e-5 && !skip {
                continue;
            }
            decided += 1;
            let grid_on_face = fm.value - grid_min <= 1e-6;
            assert_eq!(skip, grid_on_face, "{fm:?} {full:?} {grid_min}");
        }
        assert!(decided > 400, "{decided}");
    }
}
