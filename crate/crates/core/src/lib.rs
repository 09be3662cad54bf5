//! Tail-dependence networks for spatial block maxima.
//!
//! Pairwise `chi` is estimated with the F-madogram, de-biased by shrinking
//! toward a smooth distance curve, and thresholded into networks. Per-block
//! co-exceedance networks and simple covariate regressions cover the
//! year-to-year side.

pub mod annualnet;
pub mod bootstrap;
pub mod brsim;
pub mod chicurve;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod madogram;
pub mod pipeline;
pub mod regress;
pub mod rng;
pub mod shrinkage;
pub mod spline;

pub use error::{Error, Result};
