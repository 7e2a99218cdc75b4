//! Matrix-free Krylov solvers: MINRES for symmetric (possibly indefinite)
//! systems and conjugate gradients for symmetric positive definite ones.

use crate::error::{Error, Result};

/// A symmetric linear map applied without forming its matrix.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&mut self, x: &[f64], y: &mut [f64]);
}

/// Dense symmetric matrices, mostly for tests and small cross-checks.
impl LinearOperator for nalgebra::DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Relative residual target `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub residual: f64,
    /// Relative residual estimate after every iteration.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual<A: LinearOperator>(op: &mut A, x: &[f64], b: &[f64], work: &mut [f64]) -> f64 {
    op.apply(x, work);
    let r: f64 = work
        .iter()
        .zip(b)
        .map(|(ax, bi)| (bi - ax).powi(2))
        .sum::<f64>()
        .sqrt();
    let bn = norm(b);
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}

/// Inverse of a positive diagonal preconditioner, `None` for the identity.
fn precondition(diag_inv: Option<&[f64]>, r: &[f64], z: &mut [f64]) {
    match diag_inv {
        Some(d) => z
            .iter_mut()
            .zip(r)
            .zip(d)
            .for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    }
}

/// One MINRES sweep from `x0 = 0` (Paige–Saunders recurrences); the
/// returned residual is the recurrence estimate.
fn minres_sweep<A: LinearOperator>(
    op: &mut A,
    b: &[f64],
    diag_inv: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    history: &mut Vec<f64>,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    precondition(diag_inv, &r1, &mut y);
    let beta1 = dot(&r1, &y).sqrt();
    if beta1 == 0.0 {
        return (x, 0);
    }
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut iterations = 0;

    for itn in 1..=max_iter {
        iterations = itn;
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(vi, yi)| *vi = s * yi);
        op.apply(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(yi, ri)| *yi -= f * ri);
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(yi, ri)| *yi -= f * ri);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precondition(diag_inv, &r2, &mut y);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        let rel = phibar / beta1;
        history.push(rel);
        if rel <= tol || beta == 0.0 {
            break;
        }
    }
    (x, iterations)
}

/// MINRES with an optional positive diagonal preconditioner (given as its
/// inverse). Recurrence residuals can drift from the true residual, so the
/// result is re-checked and refined by restarting on the residual.
pub fn minres<A: LinearOperator>(
    op: &mut A,
    b: &[f64],
    diag_inv: Option<&[f64]>,
    opts: KrylovOptions,
) -> Result<KrylovOutcome> {
    solve_with_refinement(op, b, opts, |op, rhs, tol, budget, hist| {
        minres_sweep(op, rhs, diag_inv, tol, budget, hist)
    })
}

/// Preconditioned conjugate gradients from `x0 = 0`.
pub fn conjugate_gradient<A: LinearOperator>(
    op: &mut A,
    b: &[f64],
    diag_inv: Option<&[f64]>,
    opts: KrylovOptions,
) -> Result<KrylovOutcome> {
    solve_with_refinement(op, b, opts, |op, rhs, tol, budget, hist| {
        cg_sweep(op, rhs, diag_inv, tol, budget, hist)
    })
}

fn cg_sweep<A: LinearOperator>(
    op: &mut A,
    b: &[f64],
    diag_inv: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    history: &mut Vec<f64>,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bn = norm(b);
    if bn == 0.0 {
        return (x, 0);
    }
    let mut z = vec![0.0; n];
    precondition(diag_inv, &r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    for itn in 1..=max_iter {
        iterations = itn;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        let rel = norm(&r) / bn;
        history.push(rel);
        if rel <= tol {
            break;
        }
        precondition(diag_inv, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    (x, iterations)
}

const MAX_REFINEMENTS: usize = 4;

fn solve_with_refinement<A, F>(
    op: &mut A,
    b: &[f64],
    opts: KrylovOptions,
    mut sweep: F,
) -> Result<KrylovOutcome>
where
    A: LinearOperator,
    F: FnMut(&mut A, &[f64], f64, usize, &mut Vec<f64>) -> (Vec<f64>, usize),
{
    if b.len() != op.dim() {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has length {}, operator dimension is {}",
            b.len(),
            op.dim()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let bn = norm(b);
    let mut history = Vec::new();
    let mut work = vec![0.0; b.len()];
    if bn == 0.0 {
        return Ok(KrylovOutcome {
            x: vec![0.0; b.len()],
            iterations: 0,
            residual: 0.0,
            history,
        });
    }

    let mut x = vec![0.0; b.len()];
    let mut rhs = b.to_vec();
    let mut iterations = 0;
    let mut residual = 1.0;
    for _ in 0..=MAX_REFINEMENTS {
        let budget = opts.max_iter.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        // Each restart targets the remaining relative gap.
        let local_tol = (opts.tol / residual).min(0.5);
        let (dx, its) = sweep(op, &rhs, local_tol, budget, &mut history);
        iterations += its;
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        op.apply(&x, &mut work);
        for ((ri, bi), ax) in rhs.iter_mut().zip(b).zip(&work) {
            *ri = bi - ax;
        }
        residual = norm(&rhs) / bn;
        if residual <= opts.tol {
            return Ok(KrylovOutcome {
                x,
                iterations,
                residual,
                history,
            });
        }
        if its == 0 {
            break;
        }
    }
    let residual = true_residual(op, &x, b, &mut work);
    if residual <= opts.tol {
        return Ok(KrylovOutcome {
            x,
            iterations,
            residual,
            history,
        });
    }
    Err(Error::NotConverged {
        iterations,
        residual,
        history,
    })
}
