#![allow(clippy::needless_range_loop)]
//! Reluctant pairwise-interaction selection for generalized linear models.
//!
//! The pipeline fits main effects first, screens every candidate product
//! `x_a * x_b` with a one-dimensional offset MLE against that fit, keeps the
//! strongest candidates in a bounded min-heap, and refits main effects plus
//! the survivors. Nothing is assumed about interaction hierarchy, and the
//! full n-by-q interaction matrix is never materialized.
//!
//! Modules:
//! - [`family`]: exponential-family cumulants, deviance
//! - [`solver`]: elastic-net penalized GLM path with offsets and CV
//! - [`screen`]: the single-pass interaction screen
//! - [`pipeline`]: end-to-end orchestration
//! - [`baselines`]: MEL / APL / SIS comparators
//! - [`ordinal`]: proportional-odds models and their screening variant
//! - [`simulate`] / [`metrics`]: study designs and evaluation
//! - [`population`]: analytic and Monte-Carlo verifiers for the population
//!   quantities behind the method
//! - [`io`] / [`model_file`]: file formats
//! - [`bench`]: screening throughput measurements

pub mod baselines;
pub mod bench;
pub mod data;
pub mod error;
pub mod family;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod model_file;
pub mod ordinal;
pub mod pairs;
pub mod pipeline;
pub mod population;
pub mod screen;
pub mod simulate;
pub mod solver;

pub use data::{ColMatrix, Dataset};
pub use error::{Error, Result};
pub use family::{Family, FamilyKind};
pub use model::InteractionModel;
pub use pairs::PairIndex;
pub use pipeline::{sprinter_fit, sprinter_predict, Selection, SprinterConfig, SprinterModel, Tuning};
pub use screen::{default_m, fit_1d_offset_mle, screen, ScreenResult, SelectionRule};
