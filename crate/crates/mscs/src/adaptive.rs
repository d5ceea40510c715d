//! MSCS-AS: adaptive cross-entropy-style sampling over subset spaces.
//!
//! An independent-Bernoulli distribution p(u; omega) over models is tuned by
//! iterating sample -> LRT p-values -> level update -> weight update until
//! the level sticks at the target alpha. A final large draw from the tuned
//! distribution is LRT-verified model by model, so reported members are
//! never inferred from sampling alone.

use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{fit, Dataset, FitResult};
use crate::mscs::LrtRecord;
use crate::space::{ModelIndex, ModelSpace};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsConfig {
    /// models sampled per iteration
    pub b: usize,
    /// exploration quantile in (0,1)
    pub zeta: f64,
    /// smoothing factor in (0,1]
    pub xi: f64,
    /// target significance level
    pub alpha_star: f64,
    /// consecutive iterations at alpha_star before stopping
    pub stall_d: usize,
    /// hard iteration cap
    pub max_iters: usize,
    /// fixed-iteration stop; overrides the stall rule when set
    pub stop_at_iter: Option<usize>,
    /// initial weight for every free variable
    pub omega0: f64,
    /// weight bounds (lo, hi), 0 < lo <= hi < 1
    pub clamp: (f64, f64),
    /// size of the final draw
    pub final_draw: usize,
    pub seed: u64,
}

impl Default for AsConfig {
    fn default() -> Self {
        AsConfig {
            b: 300,
            zeta: 0.25,
            xi: 0.2,
            alpha_star: 0.05,
            stall_d: 10,
            max_iters: 200,
            stop_at_iter: None,
            omega0: 0.5,
            clamp: (0.01, 0.99),
            final_draw: 1_000_000,
            seed: 0,
        }
    }
}

impl AsConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.b >= 1
            && self.zeta > 0.0
            && self.zeta < 1.0
            && self.xi > 0.0
            && self.xi <= 1.0
            && self.alpha_star > 0.0
            && self.alpha_star < 1.0
            && self.clamp.0 > 0.0
            && self.clamp.0 <= self.clamp.1
            && self.clamp.1 < 1.0
            && self.omega0 >= self.clamp.0
            && self.omega0 <= self.clamp.1
            && self.stall_d >= 1
            && self.max_iters >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Per-iteration snapshot of the sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSnapshot {
    pub t: usize,
    pub alpha_t: f64,
    pub survivor_fraction: f64,
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsResult {
    pub omega: Vec<f64>,
    /// deduplicated, LRT-verified survivors found in the final draw
    pub members: Vec<LrtRecord>,
    /// fraction of final-draw samples (with multiplicity) whose p-value
    /// reached alpha_star
    pub hit_rate: f64,
    pub trajectory: Vec<IterationSnapshot>,
    pub converged: bool,
    pub iterations: usize,
}

/// Deterministic per-stream seed derivation (splitmix64).
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Draw `b` models u with u_j ~ Bernoulli(omega_j) per free variable; forced
/// variables are always included.
pub fn sample_models(
    omega: &[f64],
    forced: &std::collections::BTreeSet<usize>,
    b: usize,
    rng: &mut impl Rng,
) -> Vec<ModelIndex> {
    let p = omega.len();
    (0..b)
        .map(|_| {
            let ids: Vec<usize> = (1..=p)
                .filter(|j| forced.contains(j) || rng.random::<f64>() < omega[j - 1])
                .collect();
            ModelIndex::Subset(ids)
        })
        .collect()
}

/// Level update: the empirical (1-zeta)-quantile of the p-values, capped at
/// alpha_star. Index floor((1-zeta) B), 1-based, clipped to [1, B].
pub fn update_alpha(pvalues: &[f64], zeta: f64, alpha_star: f64) -> f64 {
    let b = pvalues.len();
    assert!(b >= 1);
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("p-values are not NaN"));
    let idx = (((1.0 - zeta) * b as f64).floor() as usize).clamp(1, b);
    sorted[idx - 1].min(alpha_star)
}

/// Weight update: survivor frequencies c_j smoothed into the previous
/// weights and clamped. Returns None when no sampled model survived at
/// alpha_t (caller keeps the old weights and resamples).
pub fn update_weights(
    models: &[ModelIndex],
    pvalues: &[f64],
    alpha_t: f64,
    omega_prev: &[f64],
    xi: f64,
    clamp: (f64, f64),
    forced: &std::collections::BTreeSet<usize>,
) -> Option<Vec<f64>> {
    let p = omega_prev.len();
    let mut counts = vec![0usize; p];
    let mut survivors = 0usize;
    for (m, &pv) in models.iter().zip(pvalues) {
        if pv > alpha_t {
            survivors += 1;
            if let ModelIndex::Subset(ids) = m {
                for &j in ids {
                    counts[j - 1] += 1;
                }
            }
        }
    }
    if survivors == 0 {
        return None;
    }
    let omega = (0..p)
        .map(|j| {
            if forced.contains(&(j + 1)) {
                return clamp.1;
            }
            let c = counts[j] as f64 / survivors as f64;
            (xi * c + (1.0 - xi) * omega_prev[j]).clamp(clamp.0, clamp.1)
        })
        .collect();
    Some(omega)
}

/// Shared LRT cache: canonical encoding -> record (survival decided at
/// alpha_star). Diverged candidate fits enter with p-value 0.
struct LrtCache<'a> {
    data: &'a Dataset,
    full_fit: &'a FitResult,
    alpha_star: f64,
    map: HashMap<String, LrtRecord>,
}

impl<'a> LrtCache<'a> {
    fn new(data: &'a Dataset, full_fit: &'a FitResult, alpha_star: f64) -> Self {
        LrtCache { data, full_fit, alpha_star, map: HashMap::new() }
    }

    /// Evaluate every distinct model, in parallel for the misses.
    fn evaluate(&mut self, models: &[ModelIndex]) -> Result<Vec<f64>> {
        let mut missing: Vec<&ModelIndex> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for m in models {
            let key = m.encode();
            if !self.map.contains_key(&key) && seen.insert(key) {
                missing.push(m);
            }
        }
        let fresh = missing
            .par_iter()
            .map(|m| crate::mscs::screen_one(self.data, m, self.full_fit, self.alpha_star))
            .collect::<Result<Vec<_>>>()?;
        for rec in fresh {
            self.map.insert(rec.model.encode(), rec);
        }
        Ok(models.iter().map(|m| self.map[&m.encode()].pvalue).collect())
    }

    fn record(&self, model: &ModelIndex) -> &LrtRecord {
        &self.map[&model.encode()]
    }
}

/// Algorithm driver: tune omega, then draw `final_draw` models from the
/// tuned distribution and verify them.
pub fn run_mscs_as(data: &Dataset, space: &ModelSpace, cfg: &AsConfig) -> Result<AsResult> {
    cfg.validate()?;
    let forced = match space {
        ModelSpace::AllSubsets { forced, .. } => forced.clone(),
        ModelSpace::AllPartitions { .. } => {
            return Err(Error::UnsupportedFamily { family: "partition space (adaptive search runs on subset spaces)".into() })
        }
    };
    let p = space.p();
    let full_fit = fit(data, &space.full_model())?;
    let mut cache = LrtCache::new(data, &full_fit, cfg.alpha_star);

    let mut omega: Vec<f64> = (0..p)
        .map(|j| if forced.contains(&(j + 1)) { cfg.clamp.1 } else { cfg.omega0 })
        .collect();
    let mut trajectory = Vec::new();
    let mut alpha_t = 0.0;
    let mut stall = 0usize;
    let mut converged = false;
    let mut t = 0usize;

    while t < cfg.max_iters {
        t += 1;
        let mut rng = stream_rng(cfg.seed, t as u64);
        let models = sample_models(&omega, &forced, cfg.b, &mut rng);
        let pvalues = cache.evaluate(&models)?;
        // ratchet keeps the level nondecreasing even if a batch regresses
        alpha_t = update_alpha(&pvalues, cfg.zeta, cfg.alpha_star).max(alpha_t);
        if let Some(next) = update_weights(&models, &pvalues, alpha_t, &omega, cfg.xi, cfg.clamp, &forced) {
            omega = next;
        }
        let survivor_fraction =
            pvalues.iter().filter(|&&pv| pv > alpha_t).count() as f64 / cfg.b as f64;
        trajectory.push(IterationSnapshot { t, alpha_t, survivor_fraction, omega: omega.clone() });

        match cfg.stop_at_iter {
            Some(fixed) => {
                if t >= fixed {
                    converged = true;
                    break;
                }
            }
            None => {
                if alpha_t >= cfg.alpha_star {
                    stall += 1;
                } else {
                    stall = 0;
                }
                if stall >= cfg.stall_d {
                    converged = true;
                    break;
                }
            }
        }
    }

    // final draw: verify every distinct model once, weight hits by multiplicity
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let draws = sample_models(&omega, &forced, cfg.final_draw, &mut rng);
    cache.evaluate(&draws)?;
    let mut hits = 0usize;
    let mut member_keys = std::collections::BTreeSet::new();
    for m in &draws {
        let rec = cache.record(m);
        if rec.pvalue >= cfg.alpha_star {
            hits += 1;
            member_keys.insert(m.encode());
        }
    }
    let members: Vec<LrtRecord> = member_keys
        .iter()
        .map(|k| cache.map[k].clone())
        .collect();
    let hit_rate = hits as f64 / cfg.final_draw as f64;

    Ok(AsResult {
        omega,
        members,
        hit_rate,
        trajectory,
        converged,
        iterations: t,
    })
}

/// Monte Carlo estimate of the probability that a draw from p(.; omega)
/// lands in the MSCS at alpha_star. Draws keep their multiplicity; the LRT
/// runs once per distinct model.
pub fn estimate_hit_rate(
    omega: &[f64],
    data: &Dataset,
    space: &ModelSpace,
    alpha_star: f64,
    n_draws: usize,
    seed: u64,
) -> Result<f64> {
    let forced = match space {
        ModelSpace::AllSubsets { forced, .. } => forced.clone(),
        ModelSpace::AllPartitions { .. } => {
            return Err(Error::UnsupportedFamily { family: "partition space".into() })
        }
    };
    let full_fit = fit(data, &space.full_model())?;
    let mut cache = LrtCache::new(data, &full_fit, alpha_star);
    let mut rng = stream_rng(seed, 0);
    let draws = sample_models(omega, &forced, n_draws, &mut rng);
    let pvalues = cache.evaluate(&draws)?;
    let hits = pvalues.iter().filter(|&&pv| pv >= alpha_star).count();
    Ok(hits as f64 / n_draws as f64)
}
