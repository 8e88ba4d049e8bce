//! Tree-ensemble network intrusion detection for UAV traffic.
//!
//! The crate covers the whole batch pipeline: reading per-class CSV folders
//! ([`ingest`]), imputation/scaling/encoding ([`preprocess`]), a shared CART
//! core ([`tree`]), five ensemble classifiers ([`ensembles`]), the evaluation
//! metrics ([`metrics`]), nonparametric model comparison ([`statcompare`]) and
//! explanations ([`explain`]).
//!
//! Every stochastic step takes an explicit seed; results do not depend on the
//! number of rayon worker threads.

pub mod ensembles;
pub mod error;
pub mod explain;
pub mod ingest;
pub mod json;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod statcompare;
pub mod tree;

pub use error::{Error, Result};
pub use matrix::Matrix;
