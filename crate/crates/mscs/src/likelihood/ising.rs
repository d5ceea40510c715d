//! Ising model on {0,1}^p with exact normalization by state enumeration.
//!
//! P(Y = y) = exp( sum_{j<=k} theta_jk y_j y_k + psi(theta) ), with psi the
//! negative log normalizer so state probabilities sum to one. Free
//! parameters of a candidate partition are all p main effects theta_jj plus
//! theta_jk for co-clustered pairs j < k.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::likelihood::newton;
use crate::likelihood::{packed_index, Dataset, FitResult};

pub const MAX_ISING_P: usize = 20;

fn check_p(p: usize) -> Result<()> {
    if p > MAX_ISING_P {
        Err(Error::StateSpaceTooLarge { p, max: MAX_ISING_P })
    } else {
        Ok(())
    }
}

/// psi(theta) = -log sum_y exp(theta . t(y)), over all 2^p states.
/// `theta` is the packed symmetric vector of length p(p+1)/2.
pub fn log_normalizer(p: usize, theta: &[f64]) -> Result<f64> {
    check_p(p)?;
    let mut max = f64::NEG_INFINITY;
    let energies = state_energies(p, theta);
    for &e in &energies {
        max = max.max(e);
    }
    let sum: f64 = energies.iter().map(|e| (e - max).exp()).sum();
    Ok(-(max + sum.ln()))
}

/// theta . t(s) for every state s, states indexed by their bitmask.
fn state_energies(p: usize, theta: &[f64]) -> Vec<f64> {
    let nstates = 1usize << p;
    let mut out = vec![0.0; nstates];
    for s in 0..nstates {
        let mut e = 0.0;
        for j in 0..p {
            if s >> j & 1 == 1 {
                e += theta[packed_index(p, j + 1, j + 1)];
                for k in j + 1..p {
                    if s >> k & 1 == 1 {
                        e += theta[packed_index(p, j + 1, k + 1)];
                    }
                }
            }
        }
        out[s] = e;
    }
    out
}

/// Exact state probabilities under `theta`; sums to one.
pub fn state_probabilities(p: usize, theta: &[f64]) -> Result<Vec<f64>> {
    let psi = log_normalizer(p, theta)?;
    Ok(state_energies(p, theta)
        .iter()
        .map(|e| (e + psi).exp())
        .collect())
}

/// Sufficient statistic T_jk = sum_i y_ij y_ik, packed.
fn suff_stats(data: &Dataset) -> Vec<f64> {
    let p = data.p;
    let mut t = vec![0.0; p * (p + 1) / 2];
    for i in 0..data.n {
        for j in 0..p {
            if data.y[(i, j)] == 1.0 {
                for k in j..p {
                    if data.y[(i, k)] == 1.0 {
                        t[packed_index(p, j + 1, k + 1)] += 1.0;
                    }
                }
            }
        }
    }
    t
}

pub fn loglik(data: &Dataset, theta: &[f64]) -> Result<f64> {
    let psi = log_normalizer(data.p, theta)?;
    let t = suff_stats(data);
    let dot: f64 = t.iter().zip(theta).map(|(a, b)| a * b).sum();
    Ok(dot + data.n as f64 * psi)
}

/// Gradient T - n E[t(Y)] over the full packed parameterization.
pub fn grad(data: &Dataset, theta: &[f64]) -> Result<Vec<f64>> {
    let p = data.p;
    let probs = state_probabilities(p, theta)?;
    let t = suff_stats(data);
    let mut expect = vec![0.0; t.len()];
    for (s, &pr) in probs.iter().enumerate() {
        for j in 0..p {
            if s >> j & 1 == 1 {
                for k in j..p {
                    if s >> k & 1 == 1 {
                        expect[packed_index(p, j + 1, k + 1)] += pr;
                    }
                }
            }
        }
    }
    Ok(t.iter()
        .zip(&expect)
        .map(|(ti, ei)| ti - data.n as f64 * ei)
        .collect())
}

/// Newton fit of the partition model: main effects for every variable plus
/// interactions for co-clustered pairs. Exact gradient and Hessian from
/// state enumeration.
pub fn fit_ising(data: &Dataset, labels: &[usize]) -> Result<FitResult> {
    let p = data.p;
    check_p(p)?;
    // active packed coordinates: all (j,j), plus (j,k) with equal labels
    let mut active = Vec::new();
    for j in 0..p {
        active.push(packed_index(p, j + 1, j + 1));
    }
    for j in 0..p {
        for k in j + 1..p {
            if labels[j] == labels[k] {
                active.push(packed_index(p, j + 1, k + 1));
            }
        }
    }
    active.sort_unstable();
    let dim = active.len();
    let t_full = suff_stats(data);
    let n = data.n as f64;
    let nstates = 1usize << p;

    // per-state active statistic vectors, precomputed once
    let mut state_stats: Vec<Vec<f64>> = Vec::with_capacity(nstates);
    for s in 0..nstates {
        let mut full = vec![0.0; p * (p + 1) / 2];
        for j in 0..p {
            if s >> j & 1 == 1 {
                for k in j..p {
                    if s >> k & 1 == 1 {
                        full[packed_index(p, j + 1, k + 1)] = 1.0;
                    }
                }
            }
        }
        state_stats.push(active.iter().map(|&a| full[a]).collect());
    }
    let t_active: Vec<f64> = active.iter().map(|&a| t_full[a]).collect();

    let outcome = newton::maximize(dim, |beta: &DVector<f64>| {
        // energies restricted to active coordinates
        let mut energies = vec![0.0; nstates];
        let mut max = f64::NEG_INFINITY;
        for s in 0..nstates {
            let e: f64 = state_stats[s].iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            energies[s] = e;
            max = max.max(e);
        }
        let z: f64 = energies.iter().map(|e| (e - max).exp()).sum();
        let psi = -(max + z.ln());
        let probs: Vec<f64> = energies.iter().map(|e| (e + psi).exp()).collect();

        let ll = t_active.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>() + n * psi;

        let mut mean = DVector::<f64>::zeros(dim);
        let mut second = DMatrix::<f64>::zeros(dim, dim);
        for s in 0..nstates {
            let pr = probs[s];
            for a in 0..dim {
                let sa = state_stats[s][a];
                if sa != 0.0 {
                    mean[a] += pr * sa;
                    for b in a..dim {
                        second[(a, b)] += pr * sa * state_stats[s][b];
                    }
                }
            }
        }
        let grad = DVector::from_fn(dim, |a, _| t_active[a] - n * mean[a]);
        // negative Hessian = n Cov(t)
        let mut neg_hess = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in a..dim {
                let c = n * (second[(a, b)] - mean[a] * mean[b]);
                neg_hess[(a, b)] = c;
                neg_hess[(b, a)] = c;
            }
        }
        (ll, grad, neg_hess)
    })?;

    let mut theta = vec![0.0; p * (p + 1) / 2];
    for (i, &a) in active.iter().enumerate() {
        theta[a] = outcome.theta[i];
    }
    Ok(FitResult {
        theta_hat: theta,
        loglik: outcome.loglik,
        p_gamma: dim,
        converged: true,
        iterations: outcome.iterations,
        grad_norm: outcome.grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::Family;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    #[test]
    fn probabilities_normalize() {
        for p in 1..=6 {
            let dim = p * (p + 1) / 2;
            let theta: Vec<f64> = (0..dim).map(|i| 0.3 * (i as f64 % 5.0) - 0.7).collect();
            let probs = state_probabilities(p, &theta).unwrap();
            let total: f64 = probs.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_theta_uniform() {
        let probs = state_probabilities(2, &[0.0; 3]).unwrap();
        for pr in probs {
            assert_abs_diff_eq!(pr, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn state_space_guard() {
        match log_normalizer(21, &[0.0; 231]) {
            Err(Error::StateSpaceTooLarge { p: 21, .. }) => {}
            other => panic!("expected StateSpaceTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn fit_recovers_independence_marginals() {
        // singleton partition: independent Bernoulli per coordinate; the MLE
        // main effect is the empirical logit
        let y = dmatrix![
            1.0, 0.0;
            1.0, 0.0;
            1.0, 1.0;
            0.0, 0.0;
            1.0, 0.0;
            1.0, 1.0;
            0.0, 0.0;
            1.0, 0.0
        ];
        let data = Dataset::new(Family::Ising, y, None).unwrap();
        let f = fit_ising(&data, &[0, 1]).unwrap();
        assert!(f.converged);
        assert_eq!(f.p_gamma, 2);
        // P(y1 = 1) = 6/8: theta_11 = logit(0.75)
        let logit = (0.75f64 / 0.25).ln();
        assert_abs_diff_eq!(f.theta_hat[packed_index(2, 1, 1)], logit, epsilon = 1e-6);
        assert_eq!(f.theta_hat[packed_index(2, 1, 2)], 0.0);
    }

    #[test]
    fn co_clustered_pairs_counted() {
        let y = dmatrix![
            1.0, 0.0, 1.0;
            0.0, 1.0, 0.0;
            1.0, 1.0, 1.0;
            0.0, 0.0, 1.0
        ];
        let data = Dataset::new(Family::Ising, y, None).unwrap();
        let f = fit_ising(&data, &[0, 0, 1]).unwrap();
        // 3 main effects + 1 pair
        assert_eq!(f.p_gamma, 4);
        let full = fit_ising(&data, &[0, 0, 0]).unwrap();
        assert_eq!(full.p_gamma, 6);
        assert!(full.loglik >= f.loglik - 1e-8);
    }
}
