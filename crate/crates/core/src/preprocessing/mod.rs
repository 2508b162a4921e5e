//! Quasi-steady filtering, hindcast validation, feature construction,
//! standardization and chronological train/test splitting.

pub mod features;
pub mod filter;
pub mod split;
pub mod standardize;
pub mod validation;

pub use features::{
    build_features, column_indices, feature_row, select_columns, FeatureMatrix, FeatureOptions, WaveDirEncoding,
    LINEAR_INPUTS, LINEAR_TARGETS, NONLINEAR_INPUTS, NONLINEAR_TARGETS,
};
pub use filter::{quasi_steady_filter, QuasiSteadyParams};
pub use split::{chronological_split, IndexRange, SegmentRole, SplitLayout, SplitPlan, SplitOptions};
pub use standardize::{fit_standardizer, Scaling, Standardizer};
pub use validation::{validate_hindcast, HindcastValidation, PairStats};
