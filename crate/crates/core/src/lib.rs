//! Posterior concentration for misspecified Bayesian models.
//!
//! The crate computes divergences and affinities between densities on a
//! mixed base measure, finds Kullback-Leibler projections, runs posterior
//! trajectories on finite families, checks the concentration assumptions
//! numerically, and reproduces the two counterexamples and the regression
//! settings (i.i.d. and independent non-identically distributed).

#![forbid(unsafe_code)]

pub mod catalog;
pub mod checkers;
pub mod density;
pub mod divergence;
pub mod error;
pub mod family;
pub mod inid;
pub mod measure;
pub mod poly;
pub mod posterior;
pub mod projection;
pub mod report;
pub mod rng;
pub mod scenarios;

pub use density::Density;
pub use error::{Error, Result};
pub use measure::{integrate, BaseMeasure, Point, Quad};
