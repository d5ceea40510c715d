//! Logistic and Poisson regression by Newton-Raphson, with the negative
//! link convention Logit(pi) = -x't and log(lambda) = -x't.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::likelihood::newton;
use crate::likelihood::{Dataset, FitResult};
use crate::stats::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Logit,
    Log,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-likelihood at a full-length coefficient vector.
pub fn loglik(data: &Dataset, theta: &[f64], link: Link) -> f64 {
    let x = data.x.as_ref().expect("regression family");
    let mut ll = 0.0;
    for i in 0..data.n {
        let eta: f64 = -(0..data.p).map(|j| x[(i, j)] * theta[j]).sum::<f64>();
        let y = data.y[(i, 0)];
        ll += match link {
            // y*eta - log(1 + e^eta)
            Link::Logit => y * eta - softplus(eta),
            // y*eta - e^eta - log(y!)
            Link::Log => y * eta - eta.exp() - ln_gamma(y + 1.0),
        };
    }
    ll
}

/// Gradient of [`loglik`] over all p coordinates.
pub fn grad(data: &Dataset, theta: &[f64], link: Link) -> Vec<f64> {
    let x = data.x.as_ref().expect("regression family");
    let mut g = vec![0.0; data.p];
    for i in 0..data.n {
        let eta: f64 = -(0..data.p).map(|j| x[(i, j)] * theta[j]).sum::<f64>();
        let mean = match link {
            Link::Logit => sigmoid(eta),
            Link::Log => eta.exp(),
        };
        let r = data.y[(i, 0)] - mean;
        for j in 0..data.p {
            g[j] -= r * x[(i, j)];
        }
    }
    g
}

/// Newton fit restricted to the design columns in `ids`. The empty model has
/// linear predictor 0 and needs no iteration.
pub fn fit_glm(data: &Dataset, ids: &[usize], link: Link) -> Result<FitResult> {
    let x = data.x.as_ref().expect("regression family");
    let k = ids.len();
    if k == 0 {
        let theta = vec![0.0; data.p];
        return Ok(FitResult {
            loglik: loglik(data, &theta, link),
            theta_hat: theta,
            p_gamma: 0,
            converged: true,
            iterations: 0,
            grad_norm: 0.0,
        });
    }
    let xs = DMatrix::from_fn(data.n, k, |i, c| x[(i, ids[c] - 1)]);
    // full-column-rank requirement on the submatrix
    let xtx = xs.transpose() * &xs;
    if Cholesky::new(xtx).is_none() {
        return Err(Error::RankDeficientDesign);
    }
    let n = data.n;
    let y = &data.y;
    let outcome = newton::maximize(k, |beta: &DVector<f64>| {
        let eta = -(&xs * beta);
        let mut ll = 0.0;
        let mut grad = DVector::zeros(k);
        let mut w = DVector::zeros(n);
        for i in 0..n {
            let yi = y[(i, 0)];
            let (lli, mean, wi) = match link {
                Link::Logit => {
                    let m = sigmoid(eta[i]);
                    (yi * eta[i] - softplus(eta[i]), m, m * (1.0 - m))
                }
                Link::Log => {
                    let m = eta[i].exp();
                    (yi * eta[i] - m - ln_gamma(yi + 1.0), m, m)
                }
            };
            ll += lli;
            let r = yi - mean;
            for c in 0..k {
                grad[c] -= r * xs[(i, c)];
            }
            w[i] = wi;
        }
        // negative Hessian = X' W X
        let mut neg_hess = DMatrix::zeros(k, k);
        for i in 0..n {
            for a in 0..k {
                let wa = w[i] * xs[(i, a)];
                for b in a..k {
                    neg_hess[(a, b)] += wa * xs[(i, b)];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                neg_hess[(a, b)] = neg_hess[(b, a)];
            }
        }
        (ll, grad, neg_hess)
    })?;

    // Under separation the gradient tolerance is met at a saturated fit
    // (loglik near 0, large coefficients). That fit is reported as-is:
    // divergence means failing the tolerance within the iteration budget,
    // and likelihood ratios between saturated fits stay well defined.
    let mut theta = vec![0.0; data.p];
    for (c, &j) in ids.iter().enumerate() {
        theta[j - 1] = outcome.theta[c];
    }
    Ok(FitResult {
        theta_hat: theta,
        loglik: outcome.loglik,
        p_gamma: k,
        converged: true,
        iterations: outcome.iterations,
        grad_norm: outcome.grad_norm,
    })
}
