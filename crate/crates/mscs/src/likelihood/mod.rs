//! Maximum-likelihood fitting and log-likelihood evaluation for the five
//! model families, restricted to a candidate model.
//!
//! Parameterizations used for `theta` vectors:
//! - `NormalLocation`, `Logistic`, `Poisson`: length-p coefficient vector,
//!   zeros outside the candidate model. Links use the negative sign
//!   convention Logit(pi) = -x't, log(lambda) = -x't.
//! - `NormalBlockCov` and `Ising`: packed symmetric parameterization of
//!   length p(p+1)/2, pairs (j,k) with j <= k in lexicographic order. For
//!   the covariance family the entries are Sigma_jk; for Ising they are the
//!   interaction coefficients theta_jk (theta_jj are main effects).

mod glm;
pub mod ising;
mod newton;
mod normal;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::ModelIndex;

pub use ising::MAX_ISING_P;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    NormalLocation,
    NormalBlockCov,
    Logistic,
    Poisson,
    Ising,
}

impl Family {
    pub fn uses_partitions(&self) -> bool {
        matches!(self, Family::NormalBlockCov | Family::Ising)
    }

    pub fn is_regression(&self) -> bool {
        matches!(self, Family::Logistic | Family::Poisson)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::NormalLocation => "normal-location",
            Family::NormalBlockCov => "normal-block-cov",
            Family::Logistic => "logistic",
            Family::Poisson => "poisson",
            Family::Ising => "ising",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal-location" => Ok(Family::NormalLocation),
            "normal-block-cov" => Ok(Family::NormalBlockCov),
            "logistic" => Ok(Family::Logistic),
            "poisson" => Ok(Family::Poisson),
            "ising" => Ok(Family::Ising),
            other => Err(Error::InvalidSpec(format!("unknown family: {other}"))),
        }
    }
}

/// Observations plus family tag. `y` is n x p for the multivariate families
/// and n x 1 for the regression families; `x` is the n x p design for the
/// regression families only.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub family: Family,
    pub y: DMatrix<f64>,
    pub x: Option<DMatrix<f64>>,
    pub n: usize,
    pub p: usize,
}

impl Dataset {
    pub fn new(family: Family, y: DMatrix<f64>, x: Option<DMatrix<f64>>) -> Result<Self> {
        let n = y.nrows();
        if n == 0 {
            return Err(Error::InvalidDataset("no observations".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite response".into()));
        }
        let p = match family {
            Family::NormalLocation | Family::NormalBlockCov | Family::Ising => {
                if x.is_some() {
                    return Err(Error::InvalidDataset("covariates not allowed for this family".into()));
                }
                y.ncols()
            }
            Family::Logistic | Family::Poisson => {
                if y.ncols() != 1 {
                    return Err(Error::InvalidDataset("regression response must be a single column".into()));
                }
                let x = x.as_ref().ok_or_else(|| Error::InvalidDataset("regression family requires covariates".into()))?;
                if x.nrows() != n {
                    return Err(Error::InvalidDataset("covariate/response row mismatch".into()));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDataset("non-finite covariate".into()));
                }
                x.ncols()
            }
        };
        match family {
            Family::Logistic => {
                if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidDataset("logistic responses must be 0/1".into()));
                }
            }
            Family::Poisson => {
                if y.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
                    return Err(Error::InvalidDataset("poisson responses must be non-negative integers".into()));
                }
            }
            Family::Ising => {
                if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidDataset("ising responses must be 0/1".into()));
                }
            }
            _ => {}
        }
        // only the regression designs need more rows than columns up front;
        // the other families surface deficiency at fit time
        if family.is_regression() && p >= n {
            return Err(Error::InvalidDataset(format!("require p < n (got p = {p}, n = {n})")));
        }
        Ok(Dataset { family, y, x, n, p })
    }

    /// Free-parameter count of the full model in this family.
    pub fn full_param_count(&self) -> usize {
        match self.family {
            Family::NormalLocation | Family::Logistic | Family::Poisson => self.p,
            Family::NormalBlockCov | Family::Ising => self.p * (self.p + 1) / 2,
        }
    }

    /// The model kind must match the family: subsets for location/regression
    /// families, partitions for the covariance and Ising families.
    pub fn check_model(&self, model: &ModelIndex) -> Result<()> {
        let ok = match model {
            ModelIndex::Subset(ids) => {
                !self.family.uses_partitions() && ids.iter().all(|&i| i >= 1 && i <= self.p)
            }
            ModelIndex::Partition(g) => self.family.uses_partitions() && g.len() == self.p,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ModelSpaceMismatch(format!(
                "model {} incompatible with family {}",
                model.encode(),
                self.family
            )))
        }
    }
}

/// Result of a restricted maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    pub loglik: f64,
    pub p_gamma: usize,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Maximum-likelihood fit of `model` within `data.family`.
pub fn fit(data: &Dataset, model: &ModelIndex) -> Result<FitResult> {
    data.check_model(model)?;
    match (data.family, model) {
        (Family::NormalLocation, ModelIndex::Subset(ids)) => normal::fit_location(data, ids),
        (Family::NormalBlockCov, ModelIndex::Partition(g)) => normal::fit_block_cov(data, g),
        (Family::Logistic, ModelIndex::Subset(ids)) => glm::fit_glm(data, ids, glm::Link::Logit),
        (Family::Poisson, ModelIndex::Subset(ids)) => glm::fit_glm(data, ids, glm::Link::Log),
        (Family::Ising, ModelIndex::Partition(g)) => ising::fit_ising(data, g),
        _ => unreachable!("check_model guarantees kind/family agreement"),
    }
}

/// Exact log-likelihood at an arbitrary parameter vector in the family's
/// native parameterization (see module docs).
pub fn loglik_at(data: &Dataset, theta: &[f64]) -> Result<f64> {
    check_theta_len(data, theta)?;
    match data.family {
        Family::NormalLocation => Ok(normal::loglik_location(data, theta)),
        Family::NormalBlockCov => normal::loglik_block_cov(data, theta),
        Family::Logistic => Ok(glm::loglik(data, theta, glm::Link::Logit)),
        Family::Poisson => Ok(glm::loglik(data, theta, glm::Link::Log)),
        Family::Ising => ising::loglik(data, theta),
    }
}

/// Analytic gradient of [`loglik_at`] with respect to every coordinate of
/// the native parameterization.
pub fn loglik_grad_at(data: &Dataset, theta: &[f64]) -> Result<Vec<f64>> {
    check_theta_len(data, theta)?;
    match data.family {
        Family::NormalLocation => Ok(normal::grad_location(data, theta)),
        Family::NormalBlockCov => normal::grad_block_cov(data, theta),
        Family::Logistic => Ok(glm::grad(data, theta, glm::Link::Logit)),
        Family::Poisson => Ok(glm::grad(data, theta, glm::Link::Log)),
        Family::Ising => ising::grad(data, theta),
    }
}

fn check_theta_len(data: &Dataset, theta: &[f64]) -> Result<()> {
    let want = data.full_param_count();
    if theta.len() != want {
        return Err(Error::DimensionMismatch(format!(
            "theta length {} but family {} with p = {} needs {}",
            theta.len(),
            data.family,
            data.p,
            want
        )));
    }
    Ok(())
}

/// Index of pair (j,k), 1-based with j <= k, in the packed symmetric
/// parameter vector.
pub fn packed_index(p: usize, j: usize, k: usize) -> usize {
    debug_assert!(1 <= j && j <= k && k <= p);
    let (j, k) = (j - 1, k - 1);
    // offset of row j = sum_{i<j} (p - i) = j(2p - j + 1)/2
    j * (2 * p - j + 1) / 2 + (k - j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn fd_grad(data: &Dataset, theta: &[f64]) -> Vec<f64> {
        let h = 1e-5;
        (0..theta.len())
            .map(|i| {
                let mut up = theta.to_vec();
                let mut dn = theta.to_vec();
                up[i] += h;
                dn[i] -= h;
                (loglik_at(data, &up).unwrap() - loglik_at(data, &dn).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_matches(data: &Dataset, theta: &[f64]) {
        let g = loglik_grad_at(data, theta).unwrap();
        let fd = fd_grad(data, theta);
        for (a, b) in g.iter().zip(&fd) {
            let scale = 1.0f64.max(b.abs());
            assert!((a - b).abs() / scale < 1e-4, "analytic {a} vs fd {b}");
        }
    }

    #[test]
    fn packed_index_layout() {
        // p = 3: (1,1)(1,2)(1,3)(2,2)(2,3)(3,3)
        let idx: Vec<usize> = [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]
            .iter()
            .map(|&(j, k)| packed_index(3, j, k))
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn normal_location_single_zero_observation() {
        let data = Dataset::new(Family::NormalLocation, dmatrix![0.0, 0.0], None).unwrap();
        let full = ModelIndex::subset([1, 2]).unwrap();
        let fitted = fit(&data, &full).unwrap();
        assert_eq!(fitted.theta_hat, vec![0.0, 0.0]);
        assert_abs_diff_eq!(fitted.loglik, -(2.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            loglik_at(&data, &[0.0, 0.0]).unwrap(),
            -(2.0 * std::f64::consts::PI).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn logistic_balanced_intercept() {
        let y = dmatrix![1.0; 0.0];
        let x = dmatrix![1.0; 1.0];
        let data = Dataset::new(Family::Logistic, y, Some(x)).unwrap();
        let fitted = fit(&data, &ModelIndex::subset([1]).unwrap()).unwrap();
        assert_abs_diff_eq!(fitted.theta_hat[0], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fitted.loglik, 2.0 * 0.5f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn logistic_loglik_at_zero_theta() {
        let y = dmatrix![1.0; 0.0; 1.0; 1.0];
        let x = dmatrix![0.3, 1.0; -0.2, 2.0; 0.9, -1.0; 0.1, 0.0];
        let data = Dataset::new(Family::Logistic, y, Some(x)).unwrap();
        assert_abs_diff_eq!(
            loglik_at(&data, &[0.0, 0.0]).unwrap(),
            4.0 * 0.5f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn ising_zero_theta_is_uniform() {
        let y = dmatrix![0.0, 1.0; 1.0, 1.0; 0.0, 0.0];
        let data = Dataset::new(Family::Ising, y, None).unwrap();
        let ll = loglik_at(&data, &[0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ll, -3.0 * 4.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences_all_families() {
        let yn = dmatrix![0.2, -0.4; 1.3, 0.1; -0.5, 0.6; 0.0, 0.9];
        let d = Dataset::new(Family::NormalLocation, yn.clone(), None).unwrap();
        assert_grad_matches(&d, &[0.3, -0.2]);

        let d = Dataset::new(Family::NormalBlockCov, yn, None).unwrap();
        // packed SPD matrix [[1.2, 0.3], [0.3, 0.8]]
        assert_grad_matches(&d, &[1.2, 0.3, 0.8]);

        let y = dmatrix![1.0; 0.0; 1.0; 0.0; 1.0];
        let x = dmatrix![0.3, 1.0; -0.2, 2.0; 0.9, -1.0; 0.1, 0.0; 0.5, 0.7];
        let d = Dataset::new(Family::Logistic, y, Some(x.clone())).unwrap();
        assert_grad_matches(&d, &[0.4, -0.6]);

        let y = dmatrix![2.0; 0.0; 1.0; 3.0; 1.0];
        let d = Dataset::new(Family::Poisson, y, Some(x)).unwrap();
        assert_grad_matches(&d, &[0.2, -0.3]);

        let y = dmatrix![0.0, 1.0, 1.0; 1.0, 1.0, 0.0; 0.0, 0.0, 0.0; 1.0, 0.0, 1.0];
        let d = Dataset::new(Family::Ising, y, None).unwrap();
        assert_grad_matches(&d, &[0.3, -0.5, 0.2, 0.1, -0.2, 0.4]);
    }

    #[test]
    fn poisson_fit_matches_coordinate_descent_oracle() {
        // 50 synthetic draws, frozen; oracle = coarse grid + coordinate descent
        // on the same restricted log-likelihood.
        use rand::prelude::*;
        use rand_chacha::ChaCha12Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 50;
        let theta_true = [0.4, -0.3];
        let mut xr = Vec::new();
        let mut yr = Vec::new();
        for _ in 0..n {
            let x1: f64 = rng.sample(rand_distr::StandardNormal);
            let x2: f64 = rng.sample(rand_distr::StandardNormal);
            let lambda = (-(x1 * theta_true[0] + x2 * theta_true[1])).exp();
            let y = rand_distr::Poisson::new(lambda).unwrap().sample(&mut rng);
            xr.push([x1, x2]);
            yr.push(y);
        }
        let x = DMatrix::from_fn(n, 2, |i, j| xr[i][j]);
        let y = DMatrix::from_fn(n, 1, |i, _| yr[i]);
        let data = Dataset::new(Family::Poisson, y, Some(x)).unwrap();
        let model = ModelIndex::subset([1, 2]).unwrap();
        let fitted = fit(&data, &model).unwrap();
        assert!(fitted.converged);

        // coordinate descent oracle on loglik_at
        let mut theta = [0.0f64, 0.0];
        for _ in 0..200 {
            for j in 0..2 {
                let mut best = theta[j];
                let mut best_ll = loglik_at(&data, &theta).unwrap();
                let mut step = 0.5;
                while step > 1e-9 {
                    let mut improved = false;
                    for cand in [best - step, best + step] {
                        let mut t = theta;
                        t[j] = cand;
                        let ll = loglik_at(&data, &t).unwrap();
                        if ll > best_ll {
                            best_ll = ll;
                            best = cand;
                            improved = true;
                        }
                    }
                    if !improved {
                        step /= 2.0;
                    }
                }
                theta[j] = best;
            }
        }
        let oracle_ll = loglik_at(&data, &theta).unwrap();
        assert_abs_diff_eq!(fitted.loglik, oracle_ll, epsilon = 1e-6);
    }

    #[test]
    fn nesting_monotonicity_subsets() {
        use rand::prelude::*;
        use rand_chacha::ChaCha12Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 40;
        let p = 4;
        let y = DMatrix::from_fn(n, p, |_, j| {
            let base: f64 = rng.sample(rand_distr::StandardNormal);
            base + if j < 2 { 1.0 } else { 0.0 }
        });
        let data = Dataset::new(Family::NormalLocation, y, None).unwrap();
        let small = fit(&data, &ModelIndex::subset([1]).unwrap()).unwrap();
        let mid = fit(&data, &ModelIndex::subset([1, 3]).unwrap()).unwrap();
        let full = fit(&data, &ModelIndex::subset([1, 2, 3, 4]).unwrap()).unwrap();
        assert!(mid.loglik >= small.loglik - 1e-8);
        assert!(full.loglik >= mid.loglik - 1e-8);
    }

    #[test]
    fn block_cov_full_model_closed_form() {
        use rand::prelude::*;
        use rand_chacha::ChaCha12Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 60;
        let p = 3;
        let y = DMatrix::from_fn(n, p, |_, _| rng.sample(rand_distr::StandardNormal));
        let data = Dataset::new(Family::NormalBlockCov, y.clone(), None).unwrap();
        let full = fit(&data, &ModelIndex::partition(&[0, 0, 0]).unwrap()).unwrap();
        let s = y.transpose() * &y / n as f64;
        let expect = -(n as f64 / 2.0)
            * (s.determinant().ln() + p as f64 * (2.0 * std::f64::consts::PI).ln() + p as f64);
        assert_abs_diff_eq!(full.loglik, expect, epsilon = 1e-8);
        assert_eq!(full.p_gamma, 6);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(Family::Logistic, dmatrix![2.0], Some(dmatrix![1.0])).is_err());
        assert!(Dataset::new(Family::Poisson, dmatrix![1.5], Some(dmatrix![1.0])).is_err());
        assert!(Dataset::new(Family::Logistic, dmatrix![1.0], Some(dmatrix![1.0, 2.0])).is_err()); // p >= n
        let empty: DMatrix<f64> = DMatrix::zeros(0, 2);
        assert!(Dataset::new(Family::NormalLocation, empty, None).is_err());
    }
}
