//! min ½‖c‖² subject to A c = b, c ≥ ε, solved through its dual by a
//! semismooth Newton iteration with an active-set structure.
//!
//! For multipliers λ the primal minimizer is c(λ) = max(Aᵀλ, ε); the free set
//! F = {Aᵀλ > ε} defines the generalized Hessian A_F A_Fᵀ of the concave dual
//! D(λ) = Σ(½c² − tc) + λᵀb with t = Aᵀλ.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct NnqpOutcome {
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub max_violation: f64,
    pub at_bound: usize,
}

fn primal(at_lambda: &DVector<f64>, eps: f64) -> DVector<f64> {
    at_lambda.map(|t| t.max(eps))
}

fn dual_value(a: &DMatrix<f64>, b: &DVector<f64>, lambda: &DVector<f64>, eps: f64) -> f64 {
    let t = a.tr_mul(lambda);
    let mut v = lambda.dot(b);
    for ti in t.iter() {
        let c = ti.max(eps);
        v += 0.5 * c * c - ti * c;
    }
    v
}

pub(crate) fn solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    eps: f64,
    lambda0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NnqpOutcome> {
    let k = a.nrows();
    let mut lambda = lambda0;
    let mut best_violation = f64::INFINITY;
    let mut prev_free: Option<Vec<bool>> = None;
    for it in 0..max_iter {
        let t = a.tr_mul(&lambda);
        let c = primal(&t, eps);
        let r = b - a * &c;
        let viol = r.amax();
        best_violation = best_violation.min(viol);
        let free: Vec<bool> = t.iter().map(|&x| x > eps).collect();
        log::debug!(
            "nnqp iter {it}: free {} violation {viol:e}",
            free.iter().filter(|&&f| f).count()
        );
        let unchanged = prev_free.as_ref() == Some(&free);
        if viol <= tol || (unchanged && viol <= 1e3 * tol) {
            let at_bound = free.iter().filter(|&&f| !f).count();
            return Ok(NnqpOutcome {
                weights: c.iter().copied().collect(),
                iterations: it,
                max_violation: viol,
                at_bound,
            });
        }
        let mut cols: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
        if cols.is_empty() {
            cols = (0..free.len()).collect();
        }
        let af = a.select_columns(&cols);
        let mut m = &af * af.transpose();
        let reg = 1e-14 * m.trace() / k as f64;
        for i in 0..k {
            m[(i, i)] += reg;
        }
        let dir = match m.clone().cholesky() {
            Some(ch) => ch.solve(&r),
            None => m
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::NoConvergence("singular Newton system".into()))?,
        };
        let f0 = dual_value(a, b, &lambda, eps);
        let slope = r.dot(&dir);
        let mut step = 1.0;
        loop {
            let trial = &lambda + step * &dir;
            if dual_value(a, b, &trial, eps) >= f0 + 1e-4 * step * slope || step < 1e-12 {
                lambda = trial;
                break;
            }
            step *= 0.5;
        }
        prev_free = Some(free);
    }
    Err(Error::Infeasible {
        msg: format!("no positive exact rule found after {max_iter} iterations"),
        max_violation: best_violation,
    })
}
