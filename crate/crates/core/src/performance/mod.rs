//! Calm-water trend scenarios, speed-power curves with uncertainty bands,
//! power-demand changes across cleaning events and the summary report.

pub mod curve;
pub mod model;
pub mod report;
pub mod trend;

pub use curve::{
    delta_power_at_event, delta_power_batch, delta_power_between, event_conditions, predict_calm_water_curve,
    predict_calm_water_curves, CurveCondition, CurveOptions, CurvePrediction, PowerDelta,
};
pub use model::{CalibratedModel, SpeedPathway, POWER_TARGET};
pub use report::{
    build_report, ModelInfo, NamedModel, PerformanceReport, ReportCell, ReportProvenance, ReportRow, ReportSettings,
    RowCurves,
    DELTA_CF_COLUMN, START_END_ROW,
};
pub use trend::{
    all_input_names, calm_sample, fabricate_trend_input, fgf_at, predict_trends, TrendPrediction, TrendScenario,
    TrendSeries,
};

#[cfg(test)]
pub(crate) mod fixtures {
    use nalgebra::DMatrix;

    use super::model::CalibratedModel;
    use super::trend::all_input_names;
    use crate::mvr::{PcrModel, MODEL_FORMAT_VERSION};
    use crate::preprocessing::{Scaling, Standardizer, LINEAR_TARGETS, NONLINEAR_TARGETS};

    pub const RPM_PER_KNOT: f64 = 6.9;
    pub const POWER_PER_RPM3: f64 = 0.005;

    /// PCR model on identity scaling whose predictions are exact closed forms:
    /// power = 0.005·rpm³ + fgf_gain·fgf, speed = ±rpm/6.9 and its cube.
    pub fn exact_linear(fgf_gain: f64, speed_sign: f64) -> CalibratedModel {
        let inputs = all_input_names();
        let targets: Vec<String> = LINEAR_TARGETS.iter().chain(NONLINEAR_TARGETS.iter()).map(|s| s.to_string()).collect();
        let col = |n: &str| inputs.iter().position(|m| m == n).unwrap();
        let n = inputs.len();
        let mut b = DMatrix::zeros(n, targets.len());
        b[(col("shaft_rpm_cubed"), 0)] = POWER_PER_RPM3;
        b[(col("fgf"), 0)] = fgf_gain;
        for k in [1, 2] {
            b[(col("shaft_rpm"), k)] = speed_sign / RPM_PER_KNOT;
        }
        for k in [3, 4] {
            b[(col("shaft_rpm_cubed"), k)] = speed_sign * RPM_PER_KNOT.powi(-3);
        }
        CalibratedModel::Pcr(PcrModel {
            version: MODEL_FORMAT_VERSION,
            n_components: n,
            loadings: DMatrix::identity(n, n),
            coefficients: b,
            ridge_alpha: vec![0.0; targets.len()],
            scaling: Scaling {
                x: Standardizer::identity(inputs),
                y: Standardizer::identity(targets),
            },
            warnings: Vec::new(),
        })
    }
}
