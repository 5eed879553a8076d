//! Adaptive conformal hyperparameter optimization.
//!
//! Sequential search over a finite configuration space where the next
//! configuration is the one whose conformal prediction interval has the
//! highest upper bound. Two interval families are provided: locally weighted
//! intervals (point + spread estimators) and conformalized quantile intervals
//! (lower + upper quantile estimators). The working miss-coverage level is
//! updated online from observed interval breaches.
//!
//! Module map:
//! - [`space`]: hyperparameter domains, finite candidate sets, numeric encoding.
//! - [`surrogate`]: CART, gradient boosting (squared / pinball), quantile
//!   regression forests and KNN over encoded configurations.
//! - [`conformal`]: nonconformity scores, finite-sample quantiles, intervals,
//!   adaptive alpha.
//! - [`searcher`]: the search driver and the random-search baseline.
//! - [`objectives`]: synthetic benchmark datasets and a tunable random forest.
//! - [`harness`]: experiment specs, trace CSVs and summaries.

pub mod conformal;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod objectives;
pub mod rng;
pub mod searcher;
pub mod space;
pub mod surrogate;

pub use error::{Error, Result};
