//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("partition space too large: Bell({p}) = {cardinality} exceeds enumeration cap {cap}")]
    PartitionSpaceTooLarge { p: usize, cardinality: u128, cap: u128 },

    #[error("subset space too large: 2^{free} exceeds enumeration cap {cap}")]
    SubsetSpaceTooLarge { free: usize, cap: u128 },

    #[error("model does not belong to the given model space: {0}")]
    ModelSpaceMismatch(String),

    #[error("invalid model encoding: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("fit diverged after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    FitDiverged { iterations: usize, grad_norm: f64 },

    #[error("covariance block {block} is not positive definite (need n > block size)")]
    SingularBlock { block: usize },

    #[error("design submatrix is rank deficient")]
    RankDeficientDesign,

    #[error("Ising state space too large: p = {p} > {max}")]
    StateSpaceTooLarge { p: usize, max: usize },

    #[error("candidate log-likelihood exceeds full model by {excess:.3e}; solver failure suspected")]
    NestingViolation { excess: f64 },

    #[error("family {family} is not supported by this operation")]
    UnsupportedFamily { family: String },

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    #[error("adaptive search did not converge within {max_iters} iterations")]
    MaxItersExceeded { max_iters: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model {model}: {source}")]
    ModelContext {
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
