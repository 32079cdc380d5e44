//! Sample-based uncertainty for per-pixel depth regression.
//!
//! - [`predictive`]: fuse M stochastic predictions (MC dropout passes or
//!   ensemble members) into one Gaussian per pixel with epistemic and
//!   aleatoric variance kept apart.
//! - [`losses`]: the heteroscedastic Laplace NLL and its gradient.
//! - [`metrics`]: depth errors, calibration (AUCE) and sparsification (AUSE).
//! - [`toynet`]: a small two-head regressor with MC dropout and deep
//!   ensembles, for exercising the whole pipeline at desk scale.
//! - [`geometry`]: back-projection, certainty-percentile filtering and ICP.
//! - [`io`]: binary rasters, PLY clouds, checkpoints and JSON reports.
//! - [`synth`]: deterministic synthetic datasets.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod predictive;
pub mod raster;
pub mod synth;
pub mod toynet;

pub use error::{Error, Result};
pub use predictive::{fuse_samples, GaussianPrediction, PredictiveSample, PredictiveSampleSet};
pub use raster::{DepthRaster, Raster, SigmaRaster, SIGMA_MIN};
