//! Model selection confidence sets (MSCS) by likelihood ratio screening.
//!
//! A candidate model survives when the LRT against the full model does not
//! reject it at level alpha; the surviving set extends confidence intervals
//! to the model-selection problem. The crate provides exhaustive
//! construction over subset and set-partition model spaces, inclusion
//! importance for ranking variables under selection uncertainty, an
//! adaptive stochastic search for large subset spaces, and a Monte Carlo
//! harness for coverage/cardinality experiments.

pub mod adaptive;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod mscs;
pub mod simulate;
pub mod space;
pub mod stats;

pub use error::{Error, Result};
pub use likelihood::{fit, loglik_at, loglik_grad_at, Dataset, Family, FitResult};
pub use mscs::{build_mscs, inclusion_importance, lrt, ImportanceReport, LrtRecord, MscsResult};
pub use space::{bell_number, FeatureId, ModelIndex, ModelSpace};
