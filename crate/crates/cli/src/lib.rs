//! Command-line pipeline for ship performance monitoring: synthetic data,
//! preprocessing, model calibration, trends, curves and reports.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod pipeline;
pub mod svg;
