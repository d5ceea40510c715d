//! Closed-form fits for the normal location and block-covariance families.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::likelihood::{packed_index, Dataset, FitResult};

const LN_2PI: f64 = 1.8378770664093453;

/// Location family: theta_j = column mean on the candidate coordinates,
/// zero elsewhere; unit covariance.
pub fn fit_location(data: &Dataset, ids: &[usize]) -> Result<FitResult> {
    let mut theta = vec![0.0; data.p];
    for &j in ids {
        theta[j - 1] = data.y.column(j - 1).mean();
    }
    Ok(FitResult {
        loglik: loglik_location(data, &theta),
        theta_hat: theta,
        p_gamma: ids.len(),
        converged: true,
        iterations: 0,
        grad_norm: 0.0,
    })
}

pub fn loglik_location(data: &Dataset, theta: &[f64]) -> f64 {
    let (n, p) = (data.n, data.p);
    let mut ss = 0.0;
    for i in 0..n {
        for j in 0..p {
            let r = data.y[(i, j)] - theta[j];
            ss += r * r;
        }
    }
    -0.5 * (n * p) as f64 * LN_2PI - 0.5 * ss
}

pub fn grad_location(data: &Dataset, theta: &[f64]) -> Vec<f64> {
    (0..data.p)
        .map(|j| data.y.column(j).iter().map(|y| y - theta[j]).sum())
        .collect()
}

/// Mean-zero normal with block-diagonal covariance given by the partition.
/// The MLE per block is the uncentered sample covariance submatrix.
pub fn fit_block_cov(data: &Dataset, labels: &[usize]) -> Result<FitResult> {
    let (n, p) = (data.n, data.p);
    let s = data.y.transpose() * &data.y / n as f64;
    let nblocks = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut theta = vec![0.0; p * (p + 1) / 2];
    let mut logdet = 0.0;
    let mut p_gamma = 0;
    for b in 0..nblocks {
        let idx: Vec<usize> = (0..p).filter(|&j| labels[j] == b).collect();
        let sb = DMatrix::from_fn(idx.len(), idx.len(), |r, c| s[(idx[r], idx[c])]);
        let ch = Cholesky::new(sb.clone()).ok_or(Error::SingularBlock { block: b })?;
        logdet += 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        p_gamma += idx.len() * (idx.len() + 1) / 2;
        for (r, &jr) in idx.iter().enumerate() {
            for (c, &jc) in idx.iter().enumerate().skip(r) {
                theta[packed_index(p, jr + 1, jc + 1)] = sb[(r, c)];
            }
        }
    }
    // tr(Sigma^-1 S) = p at the block MLE
    let loglik = -(n as f64 / 2.0) * (logdet + p as f64 * LN_2PI + p as f64);
    Ok(FitResult {
        theta_hat: theta,
        loglik,
        p_gamma,
        converged: true,
        iterations: 0,
        grad_norm: 0.0,
    })
}

fn unpack_sigma(p: usize, theta: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |r, c| {
        let (j, k) = if r <= c { (r, c) } else { (c, r) };
        theta[packed_index(p, j + 1, k + 1)]
    })
}

pub fn loglik_block_cov(data: &Dataset, theta: &[f64]) -> Result<f64> {
    let (n, p) = (data.n, data.p);
    let sigma = unpack_sigma(p, theta);
    let ch = Cholesky::new(sigma).ok_or(Error::SingularBlock { block: 0 })?;
    let logdet = 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let s = data.y.transpose() * &data.y / n as f64;
    let trace = ch.solve(&s).trace();
    Ok(-(n as f64 / 2.0) * (logdet + p as f64 * LN_2PI + trace))
}

/// Gradient with respect to the packed entries Sigma_jk (j <= k); the
/// off-diagonal coordinates pick up the symmetric factor 2.
pub fn grad_block_cov(data: &Dataset, theta: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = (data.n, data.p);
    let sigma = unpack_sigma(p, theta);
    let ch = Cholesky::new(sigma).ok_or(Error::SingularBlock { block: 0 })?;
    let s = data.y.transpose() * &data.y / n as f64;
    let inv = ch.inverse();
    // dl/dSigma = (n/2)(Sigma^-1 S Sigma^-1 - Sigma^-1)
    let g = (&inv * &s * &inv - &inv) * (n as f64 / 2.0);
    let mut out = vec![0.0; p * (p + 1) / 2];
    for j in 0..p {
        for k in j..p {
            let factor = if j == k { 1.0 } else { 2.0 };
            out[packed_index(p, j + 1, k + 1)] = factor * g[(j, k)];
        }
    }
    Ok(out)
}
