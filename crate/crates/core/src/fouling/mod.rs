//! Near-calm power correction, generalized admiralty coefficients, fouling
//! growth rates and factors, and the friction-coefficient reference (ΔC_F).

pub mod admiralty;
pub mod calm;
pub mod delta_cf;
pub mod fgf;
pub mod resistance;

pub use admiralty::{
    admiralty_points, fit_admiralty_exponents, fit_admiralty_fixed_m, fit_leg_trends, voyage_admiralty_series,
    AdmiraltyModel, AdmiraltyPoint, AdmiraltySeries, LegTrend, LegTrends, VoyageParams, VoyagePoint,
};
pub use calm::{correct_power_near_calm, near_calm, near_calm_filter, CorrectedPower};
pub use delta_cf::{
    delta_cf, delta_cf_si, delta_power_from_delta_cf, delta_power_start_end, write_delta_cf_csv, DeltaCfSample, DeltaPowerCf};
pub use fgf::{compute_fgf, FoulingSeries};
pub use resistance::{DefaultEstimator, ResistanceEstimator};

/// Duration represented by one averaged sample, in hours.
pub const SAMPLE_HOURS: f64 = 0.25;
