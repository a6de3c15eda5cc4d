//! Counterfactual training for differentiable classifiers.
//!
//! Counterfactual explanations are generated on the fly while a classifier is
//! trained. Mature counterfactuals are contrasted with real samples of their
//! target class through an energy-based divergence term, and the nascent
//! iterates of the same searches are reused as adversarial examples. The crate
//! also contains the evaluation machinery used to compare such models with
//! conventionally trained baselines: implausibility metrics, an unbiased MMD
//! estimator, recourse cost and validity, gradient-sign attacks, integrated
//! gradients and bootstrap percentile intervals.
//!
//! Modules, bottom up:
//!
//! - [`nn`]: matrices, tape-based autodiff, MLPs, losses and optimizers
//! - [`data`]: synthetic generators, CSV ingestion, scaling, splits, domain bounds
//! - [`cegen`]: gradient-based counterfactual search with actionability constraints
//! - [`training`]: the counterfactual training loop and its ablations
//! - [`attacks`]: FGSM / PGD and robust accuracy
//! - [`eval`]: plausibility, cost, validity, MMD, integrated gradients, bootstrap CIs

pub mod attacks;
pub mod cegen;
pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
pub mod training;

pub use error::{Error, Result};
