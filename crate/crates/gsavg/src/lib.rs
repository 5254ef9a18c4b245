//! Average-distance classification for high-dimension low-sample-size
//! (HDLSS) data.
//!
//! Plain average-distance classification compares a test point's mean
//! scaled squared Euclidean distance to each class; the scale-adjusted
//! version subtracts half of each class's within-class deviation to cancel
//! trace-of-covariance differences. Both go blind when the classes share
//! location and scale. This crate generalizes the scale-adjusted classifier
//! by replacing the scaled squared distance with a block dissimilarity: the
//! coordinates are partitioned into blocks, each block's scaled squared
//! distance passes through an increasing transform with value 0 at 0, and
//! the results are averaged. With an admissible transform the population
//! separation is an average of per-block energy distances, which is
//! positive whenever any block's distributions differ, so the classifier
//! can discriminate structure that location and scale summaries miss.
//!
//! The crate provides:
//!
//! - [`dataset`]: CSV ingestion, validation, stratified splitting;
//! - [`gamma`]: the transform registry;
//! - [`dissim`]: the block-dissimilarity kernel and pairwise statistics;
//! - [`classifier`]: the AVG, SAVG, and gSAVG discriminants;
//! - [`blocking`]: correlation-based block estimation (average-linkage
//!   clustering, percentile cuts, leave-one-out selection);
//! - [`energy`]: empirical energy-distance diagnostics;
//! - [`simgen`]: deterministic benchmark data generators;
//! - [`bench`]: the Monte-Carlo experiment harness.
//!
//! A narrative guide with runnable examples lives in the `book/` directory
//! of the repository; its code blocks run as doctests of this crate.

pub mod bench;
pub mod blocking;
pub mod classifier;
pub mod dataset;
pub mod dissim;
pub mod energy;
pub mod error;
pub mod gamma;
pub mod simgen;

#[cfg(doctest)]
mod book;

pub use crate::classifier::{fit, Decision, TrainedModel, Variant};
pub use crate::dataset::{load_csv, split_train_test, ClassId, Dataset};
pub use crate::dissim::{block_dissimilarity, Blocking};
pub use crate::error::{Error, Result};
pub use crate::gamma::Gamma;
