//! Damped Newton ascent for concave log-likelihoods.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

pub const GRAD_TOL: f64 = 1e-8;
pub const MAX_ITERS: usize = 100;
const MAX_HALVINGS: usize = 30;

pub struct NewtonOutcome {
    pub theta: DVector<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Maximize a concave objective by Newton steps with step halving.
/// `eval` returns (loglik, gradient, negative Hessian); the negative Hessian
/// must be positive semidefinite. Returns FitDiverged if the gradient
/// sup-norm does not reach `GRAD_TOL` within `MAX_ITERS` iterations.
pub fn maximize<F>(dim: usize, mut eval: F) -> Result<NewtonOutcome>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>),
{
    let mut theta = DVector::zeros(dim);
    let (mut ll, mut grad, mut neg_hess) = eval(&theta);
    for iter in 1..=MAX_ITERS {
        let grad_norm = grad.amax();
        if grad_norm <= GRAD_TOL {
            return Ok(NewtonOutcome { theta, loglik: ll, iterations: iter - 1, grad_norm });
        }
        let step = solve_spd(&neg_hess, &grad)?;
        // halve until the objective does not decrease
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = &theta + scale * &step;
            let (cll, cgrad, chess) = eval(&cand);
            if cll.is_finite() && cll >= ll - 1e-12 {
                theta = cand;
                ll = cll;
                grad = cgrad;
                neg_hess = chess;
                accepted = true;
                break;
            }
            scale /= 2.0;
        }
        if !accepted {
            return Err(Error::FitDiverged { iterations: iter, grad_norm });
        }
    }
    let grad_norm = grad.amax();
    if grad_norm <= GRAD_TOL {
        Ok(NewtonOutcome { theta, loglik: ll, iterations: MAX_ITERS, grad_norm })
    } else {
        Err(Error::FitDiverged { iterations: MAX_ITERS, grad_norm })
    }
}

/// Solve A x = b for symmetric positive definite A, with a small ridge
/// fallback when the Cholesky factorization fails near singularity.
fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Ok(ch.solve(b));
    }
    let scale = a.diagonal().amax().max(1e-12);
    for ridge_exp in [-10i32, -8, -6, -4] {
        let ridge = scale * 10f64.powi(ridge_exp);
        let mut aa = a.clone();
        for i in 0..aa.nrows() {
            aa[(i, i)] += ridge;
        }
        if let Some(ch) = Cholesky::new(aa) {
            return Ok(ch.solve(b));
        }
    }
    Err(Error::RankDeficientDesign)
}
