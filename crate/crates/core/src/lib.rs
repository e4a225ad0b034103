//! Quantum Zeno absorption tomography.
//!
//! A particle injected into a looped Mach-Zehnder interferometer crosses a
//! semitransparent pixel `L` times and ends up in the Zeno channel, the
//! orthogonal channel, or absorbed. This crate computes those channel
//! probabilities exactly, bounds the estimation precision per absorbed
//! particle, builds minimum-error discrimination rules between gray levels,
//! and runs Monte Carlo reconstructions that compare the interferometric
//! setup against a standard single-pass transmission measurement.
//!
//! Modules, bottom up:
//!
//! - [`interferometer`]: transfer matrices and channel probabilities.
//! - [`special`]: log-gamma and the regularized incomplete Beta function.
//! - [`estimation`]: Fisher information and Cramer-Rao bounds.
//! - [`decision`]: binomial thresholds, trinomial decision lines and the
//!   prior-weighted maximum-likelihood classifier.
//! - [`simulator`]: seeded per-pixel sampling, reconstruction and
//!   irradiation-ratio curves.
//! - [`pgm`]: binary portable graymap IO.

pub mod decision;
pub mod error;
pub mod estimation;
pub mod interferometer;
pub mod pgm;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
