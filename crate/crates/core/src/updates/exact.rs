use super::{dot, eval_f1, in_simplex, norm, skip_zones, SimplexUpdate, SkipMask, UpdateError, UpdateOutcome, Vec3};

/// Tolerance for classifying a minimizer as inside the simplex.
pub const TOL_DELTA: f64 = 1e-12;

/// Radicand below which no characteristic is considered to exist.
const TOL_RADICAND: f64 = 1e-14;

/// Reduced QR factorization of `dP` by Gram-Schmidt (`d <= 2`).
struct Qr {
    d: usize,
    q: [Vec3; 2],
    r11: f64,
    r12: f64,
    r22: f64,
}

impl Qr {
    fn new(u: &SimplexUpdate) -> Qr {
        let mut qr = Qr { d: u.d, q: [[0.0; 3]; 2], r11: 0.0, r12: 0.0, r22: 1.0 };
        let a1 = u.dp(0);
        qr.r11 = norm(&a1);
        qr.q[0] = a1.map(|v| v / qr.r11);
        if u.d == 2 {
            let a2 = u.dp(1);
            qr.r12 = dot(&qr.q[0], &a2);
            let v = [a2[0] - qr.r12 * qr.q[0][0], a2[1] - qr.r12 * qr.q[0][1], a2[2] - qr.r12 * qr.q[0][2]];
            qr.r22 = norm(&v);
            qr.q[1] = v.map(|x| x / qr.r22);
        }
        qr
    }

    /// Solves `R^T y = b`.
    fn solve_rt(&self, b: [f64; 2]) -> [f64; 2] {
        let y0 = b[0] / self.r11;
        if self.d == 1 {
            return [y0, 0.0];
        }
        [y0, (b[1] - self.r12 * y0) / self.r22]
    }

    /// Solves `R x = b`.
    fn solve_r(&self, b: [f64; 2]) -> [f64; 2] {
        if self.d == 1 {
            return [b[0] / self.r11, 0.0];
        }
        let x1 = b[1] / self.r22;
        [(b[0] - self.r12 * x1) / self.r11, x1]
    }

    fn qt(&self, v: &Vec3) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate().take(self.d) {
            *o = dot(&self.q[k], v);
        }
        out
    }

    /// `|(I - Q Q^T) v|^2`.
    fn perp_sq(&self, v: &Vec3) -> f64 {
        let c = self.qt(v);
        (dot(v, v) - c[0] * c[0] - c[1] * c[1]).max(0.0)
    }
}

fn delta_u(u: &SimplexUpdate) -> [f64; 2] {
    let mut du = [0.0; 2];
    for (i, v) in du.iter_mut().enumerate().take(u.d) {
        *v = u.u[i + 1] - u.u[0];
    }
    du
}

/// Unconstrained minimizer of `F0` over the affine hull of the base, in
/// closed form. Exterior minimizers are reported with `interior = false` and
/// must not be accepted as update values.
pub fn solve_f0_exact(u: &SimplexUpdate) -> Result<UpdateOutcome, UpdateError> {
    if u.d == 0 {
        return Ok(UpdateOutcome::new(u.line_value(0), &[], true, SkipMask::default(), 0));
    }
    let sh = u.s_theta() * u.h;
    let qr = Qr::new(u);
    let rtdu = qr.solve_rt(delta_u(u));
    let w = [rtdu[0] / sh, rtdu[1] / sh];
    let radicand = 1.0 - w[0] * w[0] - w[1] * w[1];
    if radicand < TOL_RADICAND {
        return Err(UpdateError::NoCharacteristic { radicand });
    }
    let l = (qr.perp_sq(&u.p[0]) / radicand).sqrt();
    let c = qr.qt(&u.p[0]);
    let x = qr.solve_r([-(c[0] + l * w[0]), -(c[1] + l * w[1])]);
    let lambda = &x[..u.d];
    let p_star = u.p_lambda(lambda);
    let value = u.u[0] + sh / l * dot(&u.p[0], &p_star);
    let interior = in_simplex(lambda, TOL_DELTA);
    let mut out = UpdateOutcome::new(value, lambda, interior, SkipMask::default(), 0);
    out.skip_mask = skip_zones(&out, u.d);
    Ok(out)
}

/// Finite-difference form of the full-dimensional `F0` update, computed
/// from vertex `i`. Agrees with [`solve_f0_exact`] for every `i`.
pub fn finite_diff_value(u: &SimplexUpdate, i: usize) -> Result<f64, UpdateError> {
    if u.d + 1 != u.n || u.d == 0 {
        return Err(UpdateError::Contract(format!(
            "finite-difference form needs a full-dimensional simplex (d = {}, n = {})",
            u.d, u.n
        )));
    }
    if i > u.d {
        return Err(UpdateError::Contract(format!("vertex {i} out of range")));
    }
    let sh = u.s_theta() * u.h;
    let qr = Qr::new(u);
    let w = qr.solve_rt(delta_u(u));
    let wn2 = w[0] * w[0] + w[1] * w[1];
    let arg = sh * sh - wn2;
    if arg < TOL_RADICAND * sh * sh {
        return Err(UpdateError::NoCharacteristic { radicand: arg / (sh * sh) });
    }
    let pi = &u.p[i];
    let qw = {
        let mut v = [0.0; 3];
        for k in 0..u.d {
            for (c, vc) in v.iter_mut().enumerate() {
                *vc += qr.q[k][c] * w[k];
            }
        }
        v
    };
    Ok(u.u[i] - dot(pi, &qw) + qr.perp_sq(pi).sqrt() * arg.sqrt())
}

/// mp0 hybrid: minimize `F0` at the update's `theta`, then report `F1` at
/// that minimizer.
pub fn mp0_update(u: &SimplexUpdate) -> Result<UpdateOutcome, UpdateError> {
    let mut out = solve_f0_exact(u)?;
    if u.d > 0 {
        out.value = eval_f1(u, out.lambda(), 0)?.value;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::testing::random_update;
    use super::super::{eval_f0, solve_constrained, CostFamily};
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sym2d(u1: f64) -> SimplexUpdate {
        SimplexUpdate::new(2, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[0.0, u1], &[1.0, 1.0], 1.0, 1.0, 0.0).unwrap()
    }

    /// Dense sampling of F0 on the segment.
    fn grid_min_1d(u: &SimplexUpdate, res: f64) -> (f64, f64) {
        let n = (1.0 / res).round() as usize;
        (0..=n)
            .map(|k| {
                let l = k as f64 / n as f64;
                (eval_f0(u, &[l], 0).unwrap().value, l)
            })
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
    }

    #[test]
    fn symmetric_case() {
        let out = solve_f0_exact(&sym2d(0.0)).unwrap();
        assert!((out.lambda()[0] - 0.5).abs() < 1e-15);
        assert!((out.value - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(out.interior);
        assert_eq!(out.skip_mask, SkipMask::all(1));
    }

    #[test]
    fn small_value_gap_stays_interior() {
        // dF/dlambda at 0 is 0.9 - 1 < 0, so the minimizer is inside.
        let u = sym2d(0.9);
        let out = solve_f0_exact(&u).unwrap();
        assert!(out.interior);
        let (best, at) = grid_min_1d(&u, 1e-4);
        assert!((at - out.lambda()[0]).abs() <= 1e-4);
        assert!(best < u.line_value(0));
        assert!((best - out.value).abs() <= 1e-8);
    }

    #[test]
    fn exterior_minimizer_falls_to_vertex() {
        let u = sym2d(1.2);
        let out = solve_f0_exact(&u).unwrap();
        assert!(out.lambda()[0] < 0.0);
        assert!(!out.interior);
        let (best, at) = grid_min_1d(&u, 1e-4);
        assert_eq!(at, 0.0);
        assert_eq!(best, u.line_value(0));
        assert_eq!(u.line_value(0), 1.0);
    }

    #[test]
    fn no_characteristic() {
        assert!(matches!(solve_f0_exact(&sym2d(1.5)), Err(UpdateError::NoCharacteristic { .. })));
        assert!(matches!(finite_diff_value(&sym2d(1.5), 0), Err(UpdateError::NoCharacteristic { .. })));
    }

    #[test]
    fn finite_difference_equivalence() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..2000 {
            let n = rng.gen_range(2..=3);
            let theta = rng.gen_range(0.0..=1.0);
            let u = random_update(&mut rng, n, n - 1, theta, true);
            let Ok(out) = solve_f0_exact(&u) else { continue };
            for i in 0..n {
                let v = finite_diff_value(&u, i).unwrap();
                assert!((v - out.value).abs() <= 1e-12 * out.value.abs(), "{v} {}", out.value);
            }
            checked += 1;
        }
        assert!(checked > 1000);
        assert!((finite_diff_value(&sym2d(0.0), 0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_contract() {
        let u =
            SimplexUpdate::new(3, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[0.0; 2], &[1.0; 2], 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(finite_diff_value(&u, 0), Err(UpdateError::Contract(_))));
    }

    #[test]
    fn interior_optimality_and_characteristic_consistency() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..1000 {
            let d = rng.gen_range(1..=2);
            let theta = rng.gen_range(0.0..=1.0);
            let u = random_update(&mut rng, 3, d, theta, true);
            let Ok(out) = solve_f0_exact(&u) else { continue };
            if !out.interior {
                continue;
            }
            let g = eval_f0(&u, out.lambda(), 1).unwrap().grad;
            assert!(g[0].hypot(g[1]) <= 1e-10);
            let p = u.p_lambda(out.lambda());
            let nu = p.map(|x| x / norm(&p));
            let sh = u.s_theta() * u.h;
            for i in 0..=d {
                let vi = u.u[i] + sh * dot(&u.p[i], &nu);
                assert!((vi - out.value).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn causal_simplex_values_exceed_inputs() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(13);
        for _ in 0..1000 {
            let d = rng.gen_range(1..=2);
            let u = random_update(&mut rng, 3, d, 0.0, false);
            if super::super::causal_gap(&u.p[..=d]) < 0.0 {
                continue;
            }
            let Ok(out) = solve_f0_exact(&u) else { continue };
            if out.interior {
                let umax = u.u[..=d].iter().cloned().fold(f64::MIN, f64::max);
                assert!(out.value >= umax);
            }
        }
    }

    #[test]
    fn mp0_constant_slowness_matches_rhr() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let mut u = random_update(&mut rng, 3, 2, 0.0, false);
            u.s = [1.0; 3];
            u.s_hat = 1.0;
            let (Ok(a), Ok(b)) = (solve_f0_exact(&u), mp0_update(&u.with_theta(0.5))) else { continue };
            assert!((a.value - b.value).abs() <= 1e-14 * a.value);
        }
        let b = mp0_update(&sym2d(0.0).with_theta(0.5)).unwrap();
        assert!((b.value - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constrained_f1_matches_exact_for_constant_slowness() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(19);
        for _ in 0..200 {
            let u = random_update(&mut rng, 3, 2, 0.5, false);
            let Ok(a) = solve_f0_exact(&u) else { continue };
            if !a.interior {
                continue;
            }
            let b = solve_constrained(&u, CostFamily::F1, None).unwrap();
            for k in 0..2 {
                assert!((a.lambda()[k] - b.lambda()[k]).abs() <= 1e-8);
            }
            assert!((a.value - b.value).abs() <= 1e-12 * a.value);
        }
    }
}
