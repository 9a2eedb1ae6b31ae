use super::{dot, norm, CostFamily, SimplexUpdate, UpdateError, Vec3};

/// Cost value with optional gradient and Hessian in `lambda`. Entries past
/// `d` (and derivatives not requested) are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// Anything minimized over the standard simplex by the SQP solver.
pub trait SimplexCost {
    fn d(&self) -> usize;
    fn eval(&self, lambda: &[f64], order: u8) -> Result<CostEval, UpdateError>;
}

/// `F0` or `F1` of a simplex update.
#[derive(Clone, Copy, Debug)]
pub struct FCost<'a> {
    pub update: &'a SimplexUpdate,
    pub family: CostFamily,
}

impl SimplexCost for FCost<'_> {
    fn d(&self) -> usize {
        self.update.d
    }

    fn eval(&self, lambda: &[f64], order: u8) -> Result<CostEval, UpdateError> {
        eval_f(self.update, self.family, lambda, order)
    }
}

pub fn eval_f0(u: &SimplexUpdate, lambda: &[f64], order: u8) -> Result<CostEval, UpdateError> {
    eval_f(u, CostFamily::F0, lambda, order)
}

pub fn eval_f1(u: &SimplexUpdate, lambda: &[f64], order: u8) -> Result<CostEval, UpdateError> {
    eval_f(u, CostFamily::F1, lambda, order)
}

/// `dP^T v` for the first `d` columns.
#[inline]
pub(crate) fn dpt(u: &SimplexUpdate, v: &Vec3) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (i, o) in out.iter_mut().enumerate().take(u.d) {
        *o = dot(&u.dp(i), v);
    }
    out
}

/// `(c / |q|) dP^T (I - q q^T / |q|^2) dP`, the Hessian of `c |p_lambda - q0|`.
#[inline]
pub(crate) fn proj_hess(u: &SimplexUpdate, q: &Vec3, qn: f64, c: f64) -> [[f64; 2]; 2] {
    let nu = [q[0] / qn, q[1] / qn, q[2] / qn];
    let a = dpt(u, &nu);
    let mut h = [[0.0; 2]; 2];
    for i in 0..u.d {
        let ei = u.dp(i);
        for j in 0..=i {
            let ej = u.dp(j);
            let v = c / qn * (dot(&ei, &ej) - a[i] * a[j]);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

pub fn eval_f(u: &SimplexUpdate, family: CostFamily, lambda: &[f64], order: u8) -> Result<CostEval, UpdateError> {
    debug_assert_eq!(lambda.len(), u.d);
    let p = u.p_lambda(lambda);
    let pn = norm(&p);
    let mut ev = CostEval::default();
    let mut u_lambda = u.u[0];
    for (i, l) in lambda.iter().enumerate() {
        u_lambda += l * (u.u[i + 1] - u.u[0]);
    }
    let sw = match family {
        CostFamily::F0 => u.s_theta(),
        CostFamily::F1 => u.s_theta_lambda(lambda),
    };
    ev.value = u_lambda + sw * u.h * pn;
    if order == 0 || u.d == 0 {
        return Ok(ev);
    }
    if pn == 0.0 {
        return Err(UpdateError::Singular);
    }
    let nu = [p[0] / pn, p[1] / pn, p[2] / pn];
    let a = dpt(u, &nu);
    for i in 0..u.d {
        ev.grad[i] = u.u[i + 1] - u.u[0] + sw * u.h * a[i];
        if family == CostFamily::F1 {
            ev.grad[i] += u.theta * u.h * pn * (u.s[i + 1] - u.s[0]);
        }
    }
    if order >= 2 {
        ev.hess = proj_hess(u, &p, pn, sw * u.h);
        if family == CostFamily::F1 {
            for i in 0..u.d {
                for j in 0..u.d {
                    let dsi = u.s[i + 1] - u.s[0];
                    let dsj = u.s[j + 1] - u.s[0];
                    ev.hess[i][j] += u.theta * u.h * (a[i] * dsj + dsi * a[j]);
                }
            }
        }
    }
    Ok(ev)
}
