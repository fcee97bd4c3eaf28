//! Regression-based subspace classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`regression`]: dense least-squares, ridge, LASSO, elastic-net and OMP solvers.
//! - [`subspace`]: nearest-subspace and union-of-subspace classifiers over raw
//!   per-class training dictionaries.
//! - [`worm`]: the weighted orthogonal regression method. Each class is summarised by
//!   the leading left singular vectors of its training matrix, one closed-form
//!   regression is solved against the concatenated dictionary, and the class is chosen
//!   by singular-value-weighted coefficient scores.
//! - [`baselines`]: KNN, a linear one-vs-rest SVM and OMP comparison classifiers.
//! - [`synthetic`]: the noisy points-on-lines generator used for benchmarking.
//! - [`features`]: spectral features for multichannel signals.
//!
//! Matrices are column-oriented throughout: every column of a [`DataMatrix`] is one
//! sample or one dictionary atom.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod features;
pub mod matrix;
pub mod regression;
pub mod subspace;
pub mod synthetic;
pub mod worm;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use matrix::DataMatrix;
pub use regression::{CoefficientVector, RegularizationParams};
pub use worm::{ClassDictionary, DecisionVariant, WormConfig, WormModel};
