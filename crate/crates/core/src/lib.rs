//! Hydrodynamic performance monitoring for sea-going ships from in-service data.
//!
//! The crate calibrates three regression models of a ship's hydrodynamic
//! state (non-linear PCR, non-linear PLSR and a Monte-Carlo dropout MLP),
//! builds fouling growth factors from generalized admiralty coefficient
//! trends, and reports the change in power demand across propeller and hull
//! cleaning events.
//!
//! - [`data_model`] - samples, events, ship configuration, CSV ingestion, hindcast grids
//! - [`preprocessing`] - quasi-steady filter, hindcast validation, features, standardization, splits
//! - [`mvr`] - PCA, PCR, NIPALS PLSR, sequential cross-validation, metrics
//! - [`ann`] - MLP with dropout, Adam training, Monte-Carlo dropout predictions
//! - [`fouling`] - near-calm correction, admiralty exponents, fouling growth factors, ΔC_F
//! - [`performance`] - trend scenarios, calm-water curves, per-event power deltas, reports
//! - [`synth`] - synthetic voyage generator with known fouling truth

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ann;
pub mod data_model;
pub mod error;
pub mod fouling;
pub mod linalg;
pub mod mvr;
pub mod performance;
pub mod preprocessing;
pub mod synth;

pub use error::{Error, ErrorKind, Result};

/// Metres per second in one knot.
pub const KNOT: f64 = 1852.0 / 3600.0;

/// Below this speed over ground a ship counts as static (fouling grows, no propulsion data).
pub const STATIC_SPEED_KNOTS: f64 = 3.0;
