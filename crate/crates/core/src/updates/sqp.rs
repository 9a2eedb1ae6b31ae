use super::{solve_f0_exact, CostFamily, FCost, SimplexCost, SimplexUpdate, SkipMask, UpdateError, UpdateOutcome};

#[derive(Clone, Copy, Debug)]
pub struct SqpOptions {
    pub max_iter: u32,
    /// Relative tolerance on step length and projected gradient, scaled by
    /// `1 + |F|`.
    pub tol: f64,
}

impl Default for SqpOptions {
    fn default() -> Self {
        SqpOptions { max_iter: 20, tol: 1e-10 }
    }
}

/// Projection onto the standard simplex `{lambda >= 0, sum(lambda) <= 1}`.
pub fn project_to_simplex(lambda: &[f64]) -> [f64; 2] {
    match lambda.len() {
        0 => [0.0; 2],
        1 => [lambda[0].clamp(0.0, 1.0), 0.0],
        _ => {
            let (a, b) = (lambda[0], lambda[1]);
            if a >= 0.0 && b >= 0.0 && a + b <= 1.0 {
                return [a, b];
            }
            let (ca, cb) = (a.max(0.0), b.max(0.0));
            if ca + cb <= 1.0 {
                // Closest point on an axis edge.
                return [ca, cb];
            }
            let t = ((a - b + 1.0) / 2.0).clamp(0.0, 1.0);
            [t, 1.0 - t]
        }
    }
}

fn norm2(v: &[f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Quadratic model `g.x + x.H.x / 2` of a step `x`.
fn model(g: &[f64; 2], h: &[[f64; 2]; 2], x: &[f64; 2], d: usize) -> f64 {
    let mut m = 0.0;
    for i in 0..d {
        m += g[i] * x[i];
        for j in 0..d {
            m += 0.5 * x[i] * h[i][j] * x[j];
        }
    }
    m
}

/// Global minimizer of the quadratic model over the simplex, relative to
/// `lambda`. For an indefinite model the minimum lies on the boundary, so
/// the edges are enumerated with their endpoints.
fn qp_step(lambda: &[f64; 2], g: &[f64; 2], h: &[[f64; 2]; 2], d: usize) -> [f64; 2] {
    let edge = |a: [f64; 2], e: [f64; 2]| {
        let off = [a[0] - lambda[0], a[1] - lambda[1]];
        let hoff = [h[0][0] * off[0] + h[0][1] * off[1], h[1][0] * off[0] + h[1][1] * off[1]];
        let ehe = e[0] * (h[0][0] * e[0] + h[0][1] * e[1]) + e[1] * (h[1][0] * e[0] + h[1][1] * e[1]);
        let b = (g[0] + hoff[0]) * e[0] + (g[1] + hoff[1]) * e[1];
        let mut ts = vec![0.0, 1.0];
        if ehe > 0.0 {
            ts.push((-b / ehe).clamp(0.0, 1.0));
        }
        ts.into_iter()
            .map(|t| {
                let x = [off[0] + t * e[0], off[1] + t * e[1]];
                (x, model(g, h, &x, d))
            })
            .fold(([0.0; 2], f64::INFINITY), |m, c| if c.1 < m.1 { c } else { m })
    };
    if d == 1 {
        return edge([0.0, 0.0], [1.0, 0.0]).0;
    }
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if h[0][0] > 0.0 && det > 0.0 {
        let newton = [-(h[1][1] * g[0] - h[0][1] * g[1]) / det, -(-h[1][0] * g[0] + h[0][0] * g[1]) / det];
        let y = [lambda[0] + newton[0], lambda[1] + newton[1]];
        if y[0] >= 0.0 && y[1] >= 0.0 && y[0] + y[1] <= 1.0 {
            return newton;
        }
    }
    [([0.0, 0.0], [1.0, 0.0]), ([0.0, 0.0], [0.0, 1.0]), ([1.0, 0.0], [-1.0, 1.0])]
        .into_iter()
        .map(|(a, e)| edge(a, e))
        .fold(([0.0; 2], f64::INFINITY), |m, c| if c.1 < m.1 { c } else { m })
        .0
}

/// Projected-gradient step, used when the model step is not a descent
/// direction (negative curvature).
fn gradient_step(lambda: &[f64; 2], g: &[f64; 2], h: &[[f64; 2]; 2], d: usize) -> [f64; 2] {
    let scale = (h[0][0].powi(2) + h[1][1].powi(2) + 2.0 * h[0][1].powi(2)).sqrt();
    let alpha = if scale > 0.0 { 1.0 / scale } else { 1.0 / norm2(g).max(1e-300) };
    let y = project_to_simplex(&[lambda[0] - alpha * g[0], lambda[1] - alpha * g[1]][..d]);
    [y[0] - lambda[0], y[1] - lambda[1]]
}

fn value(cost: &dyn SimplexCost, l: &[f64; 2]) -> f64 {
    cost.eval(&l[..cost.d()], 0).map(|e| e.value).unwrap_or(f64::INFINITY)
}

/// Golden-section minimum of the cost along `a + t e`, `t` in `[0, 1]`.
fn edge_min(cost: &dyn SimplexCost, a: [f64; 2], e: [f64; 2]) -> ([f64; 2], f64) {
    let at = |t: f64| [a[0] + t * e[0], a[1] + t * e[1]];
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (value(cost, &at(x1)), value(cost, &at(x2)));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = value(cost, &at(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = value(cost, &at(x2));
        }
    }
    let t = 0.5 * (lo + hi);
    (at(t), value(cost, &at(t)))
}

/// Best of the iterate, the vertices and the edge minima.
fn fallback(cost: &dyn SimplexCost, iterate: [f64; 2]) -> ([f64; 2], f64) {
    let d = cost.d();
    let mut cands = vec![(iterate, value(cost, &iterate))];
    let verts: &[[f64; 2]] = if d == 1 { &[[0.0, 0.0], [1.0, 0.0]] } else { &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] };
    for v in verts {
        cands.push((*v, value(cost, v)));
    }
    if d == 2 {
        for (a, e) in [([0.0, 0.0], [1.0, 0.0]), ([0.0, 0.0], [0.0, 1.0]), ([1.0, 0.0], [-1.0, 1.0])] {
            cands.push(edge_min(cost, a, e));
        }
    }
    cands.into_iter().fold(([0.0; 2], f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

/// Minimizes any simplex cost over the closed standard simplex by
/// active-set SQP with exact Hessians and an Armijo line search.
pub fn solve_constrained_cost(
    cost: &dyn SimplexCost,
    init: &[f64],
    opts: SqpOptions,
) -> Result<UpdateOutcome, UpdateError> {
    let d = cost.d();
    if d == 0 {
        let v = cost.eval(&[], 0)?.value;
        return Ok(UpdateOutcome::new(v, &[], true, SkipMask::default(), 0));
    }
    if init.len() != d {
        return Err(UpdateError::Contract(format!("initial point has {} entries, expected {d}", init.len())));
    }
    let mut lam = project_to_simplex(init);
    let done = |lam: [f64; 2], v: f64, it: u32| Ok(UpdateOutcome::new(v, &lam[..d], true, SkipMask::all(d), it));
    for it in 0..opts.max_iter {
        let ev = cost.eval(&lam[..d], 2)?;
        let tol = opts.tol * (1.0 + ev.value.abs());
        let pg = project_to_simplex(&[lam[0] - ev.grad[0], lam[1] - ev.grad[1]][..d]);
        if norm2(&[pg[0] - lam[0], pg[1] - lam[1]]) <= tol {
            return done(lam, ev.value, it);
        }
        let mut step = qp_step(&lam, &ev.grad, &ev.hess, d);
        let mut slope = ev.grad[0] * step[0] + ev.grad[1] * step[1];
        if slope >= 0.0 {
            step = gradient_step(&lam, &ev.grad, &ev.hess, d);
            slope = ev.grad[0] * step[0] + ev.grad[1] * step[1];
        }
        if norm2(&step) <= tol || slope >= 0.0 {
            return done(lam, ev.value, it);
        }
        let mut t = 1.0;
        let mut next;
        let mut fnext;
        loop {
            next = project_to_simplex(&[lam[0] + t * step[0], lam[1] + t * step[1]][..d]);
            fnext = value(cost, &next);
            if fnext <= ev.value + 1e-4 * t * slope || t < 1e-12 {
                break;
            }
            t *= 0.5;
        }
        if fnext > ev.value {
            return done(lam, ev.value, it + 1);
        }
        let moved = norm2(&[next[0] - lam[0], next[1] - lam[1]]);
        lam = next;
        if moved <= tol {
            return done(lam, fnext, it + 1);
        }
    }
    let (l, v) = fallback(cost, lam);
    Err(UpdateError::NoConvergence {
        iterations: opts.max_iter,
        best: Box::new(UpdateOutcome::new(v, &l[..d], true, SkipMask::all(d), opts.max_iter)),
    })
}

/// Constrained minimum of `F0` or `F1` over the simplex. Without a warm
/// start the projected closed-form `F0` minimizer is used, or the centroid
/// when no characteristic exists.
pub fn solve_constrained(
    u: &SimplexUpdate,
    family: CostFamily,
    init: Option<&[f64]>,
) -> Result<UpdateOutcome, UpdateError> {
    let start = match init {
        Some(l) => {
            let mut s = [0.0; 2];
            s[..l.len().min(2)].copy_from_slice(&l[..l.len().min(2)]);
            s
        }
        None => warm_start(u),
    };
    let len = init.map_or(u.d, |l| l.len());
    solve_constrained_cost(&FCost { update: u, family }, &start[..len], SqpOptions::default())
}

pub(crate) fn warm_start(u: &SimplexUpdate) -> [f64; 2] {
    match solve_f0_exact(u) {
        Ok(o) => project_to_simplex(o.lambda()),
        Err(_) => {
            let c = 1.0 / (u.d + 1) as f64;
            [c, if u.d == 2 { c } else { 0.0 }]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::random_update;
    use super::super::{eval_f, CostEval};
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Dense barycentric sampling.
    fn grid_min(u: &SimplexUpdate, family: CostFamily, res: f64) -> f64 {
        let n = (1.0 / res).round() as usize;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            if u.d == 1 {
                best = best.min(eval_f(u, family, &[i as f64 / n as f64], 0).unwrap().value);
                continue;
            }
            for j in 0..=(n - i) {
                let l = [i as f64 / n as f64, j as f64 / n as f64];
                best = best.min(eval_f(u, family, &l, 0).unwrap().value);
            }
        }
        best
    }

    #[test]
    fn projection() {
        assert_eq!(project_to_simplex(&[0.2, 0.3]), [0.2, 0.3]);
        assert_eq!(project_to_simplex(&[0.8, 0.8]), [0.5, 0.5]);
        assert_eq!(project_to_simplex(&[-1.0, 0.5]), [0.0, 0.5]);
        assert_eq!(project_to_simplex(&[2.0, -1.0]), [1.0, 0.0]);
        assert_eq!(project_to_simplex(&[1.7]), [1.0, 0.0]);
    }

    #[test]
    fn symmetric_f1() {
        let u = SimplexUpdate::new(2, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[0.0, 0.0], &[1.0, 1.0], 1.0, 1.0, 0.5)
            .unwrap();
        let out = solve_constrained(&u, CostFamily::F1, Some(&[0.1])).unwrap();
        assert!((out.lambda()[0] - 0.5).abs() < 1e-9);
        assert!((out.value - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_sampling() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        for family in [CostFamily::F0, CostFamily::F1] {
            for _ in 0..200 {
                let d = rng.gen_range(1..=2);
                let u = random_update(&mut rng, 3, d, 0.5, true);
                let out = solve_constrained(&u, family, None).unwrap();
                let g = grid_min(&u, family, 1e-3);
                assert!(out.value <= g + 1e-12, "{} {}", out.value, g);
                assert!(g - out.value <= 1e-5, "{} {}", out.value, g);
            }
        }
    }

    struct Saddle;

    impl SimplexCost for Saddle {
        fn d(&self) -> usize {
            2
        }

        fn eval(&self, l: &[f64], _order: u8) -> Result<CostEval, UpdateError> {
            let (x, y) = (l[0] - 0.3, l[1] - 0.3);
            Ok(CostEval { value: x * x - y * y, grad: [2.0 * x, -2.0 * y], hess: [[2.0, 0.0], [0.0, -2.0]] })
        }
    }

    #[test]
    fn indefinite_hessian_reaches_boundary() {
        let out = solve_constrained_cost(&Saddle, &[0.3, 0.31], SqpOptions::default());
        let v = match out {
            Ok(o) => o.value,
            Err(UpdateError::NoConvergence { best, .. }) => best.value,
            Err(e) => panic!("{e}"),
        };
        // Minimum over the simplex is at (0.3, 0.7): -0.16.
        assert!(v <= -0.16 + 1e-6, "{v}");
    }

    #[test]
    fn iteration_cap_returns_best() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(29);
        let u = random_update(&mut rng, 3, 2, 0.5, true);
        let opts = SqpOptions { max_iter: 0, tol: 1e-10 };
        match solve_constrained_cost(&FCost { update: &u, family: CostFamily::F1 }, &[0.3, 0.3], opts) {
            Err(UpdateError::NoConvergence { best, .. }) => {
                let exact = solve_constrained(&u, CostFamily::F1, None).unwrap().value;
                assert!(best.value >= exact - 1e-12);
                for i in 0..3 {
                    assert!(best.value <= u.line_value(i) + 1e-15);
                }
            }
            other => panic!("{other:?}"),
        }
    }
}
