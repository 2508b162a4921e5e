//! In-memory pipeline stages. The command layer wraps these with file I/O.

use chrono::Duration;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use shipperf::ann::{mlp_init, predict_mc, train, DropoutPrior, TrainParams, TrainReport};
use shipperf::data_model::{merge_hindcast, CleaningEvent, HindcastSet, ShipConfig, VoyageSample};
use shipperf::fouling::{
    admiralty_points, compute_fgf, correct_power_near_calm, delta_cf, fit_admiralty_exponents, fit_leg_trends,
    near_calm_filter, voyage_admiralty_series, AdmiraltyModel, AdmiraltySeries, DefaultEstimator, DeltaCfSample,
    FoulingSeries, LegTrends, VoyageParams,
};
use shipperf::linalg::select_rows;
use shipperf::mvr::{pcr_fit, plsr_fit, regression_metrics, sequential_cv, CvParams, CvReport, ModelKind, TargetMetrics};
use shipperf::performance::{build_report, CalibratedModel, NamedModel, PerformanceReport, ReportProvenance, ReportSettings, TrendScenario};
use shipperf::preprocessing::{
    build_features, chronological_split, column_indices, fit_standardizer, quasi_steady_filter, validate_hindcast,
    FeatureMatrix, FeatureOptions, HindcastValidation, QuasiSteadyParams, Scaling, SplitOptions, SplitPlan,
    LINEAR_INPUTS, LINEAR_TARGETS,
};
use shipperf::{Error, STATIC_SPEED_KNOTS};

/// A pipeline failure tagged with the stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub trait InStage<T> {
    fn stage(self, stage: &'static str) -> StageResult<T>;
}

impl<T> InStage<T> for shipperf::Result<T> {
    fn stage(self, stage: &'static str) -> StageResult<T> {
        self.map_err(|error| StageError { stage, error })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessParams {
    pub quasi_steady: QuasiSteadyParams,
    pub voyage: VoyageParams,
    pub split: SplitOptions,
    pub features: FeatureOptions,
}

pub struct Preprocessed {
    pub samples: Vec<VoyageSample>,
    pub steady: Vec<bool>,
    pub validation: Option<HindcastValidation>,
    pub near_calm: Vec<bool>,
    pub corrected_power: Vec<Option<f64>>,
    pub admiralty: AdmiraltyModel,
    pub admiralty_points: usize,
    pub series: AdmiraltySeries,
    pub legs: LegTrends,
    pub fouling: FoulingSeries,
    /// sample index of each feature row
    pub rows: Vec<usize>,
    pub features: FeatureMatrix,
    pub split: SplitPlan,
}

/// Rows used for modelling: quasi-steady and sailing.
pub fn model_rows(samples: &[VoyageSample], steady: &[bool]) -> Vec<usize> {
    (0..samples.len())
        .filter(|&i| steady[i] && samples[i].gps_speed >= STATIC_SPEED_KNOTS)
        .collect()
}

/// Quasi-steady filter, hindcast merge and check, near-calm correction,
/// admiralty fit, fouling factors, features and split.
pub fn preprocess(
    mut samples: Vec<VoyageSample>,
    events: &[CleaningEvent],
    hindcast: Option<&HindcastSet>,
    ship: &ShipConfig,
    params: &PreprocessParams,
) -> StageResult<Preprocessed> {
    ship.validate().stage("ship")?;
    let steady = quasi_steady_filter(&samples, &params.quasi_steady).stage("quasi_steady")?;
    let validation = match hindcast {
        Some(h) => {
            merge_hindcast(&mut samples, h).stage("hindcast")?;
            Some(validate_hindcast(&samples).stage("hindcast")?)
        }
        None => None,
    };
    let near_calm = near_calm_filter(&samples);
    let est = DefaultEstimator;
    let mut corrected_power = vec![None; samples.len()];
    for (i, s) in samples.iter().enumerate() {
        if steady[i] && near_calm[i] && s.log_speed > STATIC_SPEED_KNOTS {
            let c = correct_power_near_calm(s, ship, &est).stage("near_calm")?;
            if !c.floored {
                corrected_power[i] = Some(c.power);
            }
        }
    }
    let points = admiralty_points(&samples, &steady, ship, &est).stage("admiralty")?;
    let admiralty = fit_admiralty_exponents(&points).stage("admiralty")?;
    let series = voyage_admiralty_series(&samples, &corrected_power, &admiralty, ship, &params.voyage);
    let legs = fit_leg_trends(&series, events).stage("fouling")?;
    let fouling = compute_fgf(&samples, events, &legs.rates(), STATIC_SPEED_KNOTS).stage("fouling")?;

    let rows = model_rows(&samples, &steady);
    let picked: Vec<VoyageSample> = rows.iter().map(|&i| samples[i].clone()).collect();
    let fgf: Vec<f64> = rows.iter().map(|&i| fouling.total[i]).collect();
    let options = FeatureOptions {
        include_nonlinear: true,
        ..params.features
    };
    let features = build_features(&picked, &fgf, options).stage("features")?;
    let event_rows: Vec<usize> = events
        .iter()
        .map(|e| features.timestamps.partition_point(|&t| t <= e.timestamp))
        .collect();
    let split = chronological_split(features.nrows(), &event_rows, &params.split).stage("split")?;
    Ok(Preprocessed {
        samples,
        steady,
        validation,
        near_calm,
        corrected_power,
        admiralty,
        admiralty_points: points.len(),
        series,
        legs,
        fouling,
        rows,
        features,
        split,
    })
}

/// ΔC_F for quasi-steady sailing samples; samples the estimate cannot use are skipped.
pub fn delta_cf_series(samples: &[VoyageSample], steady: &[bool], ship: &ShipConfig) -> Vec<DeltaCfSample> {
    model_rows(samples, steady)
        .into_iter()
        .filter(|&i| samples[i].log_speed > STATIC_SPEED_KNOTS)
        .filter_map(|i| delta_cf(&samples[i], ship, &DefaultEstimator).ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Pcr,
    Plsr,
    Ann,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Pcr, Family::Plsr, Family::Ann];

    pub fn name(self) -> &'static str {
        match self {
            Family::Pcr => "pcr",
            Family::Plsr => "plsr",
            Family::Ann => "ann",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> shipperf::Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected pcr, plsr or ann)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnSettings {
    pub hidden: Vec<usize>,
    pub prior: DropoutPrior,
    pub train: TrainParams,
    pub seed: u64,
    /// passes stored with the model for later predictions
    pub mc_passes: usize,
    /// passes used for the MC columns of the metrics table
    pub metrics_mc_passes: usize,
}

impl Default for AnnSettings {
    fn default() -> Self {
        Self {
            hidden: vec![50],
            prior: DropoutPrior::default(),
            train: TrainParams::default(),
            seed: 1,
            mc_passes: 10_000,
            metrics_mc_passes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrateParams {
    pub models: Vec<Family>,
    pub cv: CvParams,
    /// upper bound on components tried by cross-validation; all inputs when absent
    pub max_components: Option<usize>,
    pub ann: AnnSettings,
}

impl Default for CalibrateParams {
    fn default() -> Self {
        Self {
            models: Family::ALL.to_vec(),
            cv: CvParams::default(),
            max_components: None,
            ann: AnnSettings::default(),
        }
    }
}

/// Metrics of one model on one split, per target; `None` where the model
/// does not predict that target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsColumn {
    pub model: String,
    pub split: String,
    pub targets: Vec<Option<TargetMetrics>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub target_names: Vec<String>,
    pub columns: Vec<MetricsColumn>,
}

pub struct Calibrated {
    pub models: Vec<(Family, CalibratedModel)>,
    pub cv: Vec<(Family, CvReport)>,
    pub loss_history: Option<TrainReport>,
    pub metrics: MetricsTable,
    pub failures: Vec<(Family, StageError)>,
}

fn sorted_union(a: Vec<usize>, b: Vec<usize>) -> Vec<usize> {
    let mut v: Vec<usize> = a.into_iter().chain(b).collect();
    v.sort_unstable();
    v
}

fn fit_linear(
    family: Family,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    scaling: &Scaling,
    params: &CalibrateParams,
) -> StageResult<(CalibratedModel, CvReport)> {
    let stage = family.name();
    let kind = match family {
        Family::Pcr => ModelKind::Pcr,
        _ => ModelKind::Plsr,
    };
    let max_a = params.max_components.unwrap_or(x.ncols()).min(x.ncols());
    let report = sequential_cv(x, y, kind, max_a, &params.cv).stage(stage)?;
    let a = report.selected_components;
    let model = match family {
        Family::Pcr => CalibratedModel::Pcr(pcr_fit(x, y, a, &params.cv.ridge_alphas, scaling.clone()).stage(stage)?),
        _ => CalibratedModel::Plsr(plsr_fit(x, y, a, &params.cv.nipals, scaling.clone()).stage(stage)?),
    };
    Ok((model, report))
}

/// Fits the requested model families on the training rows and scores them
/// on training and test rows.
pub fn calibrate(features: &FeatureMatrix, split: &SplitPlan, params: &CalibrateParams) -> StageResult<Calibrated> {
    let train_rows = sorted_union(split.train_rows(), split.validation_rows());
    let test_rows = split.test_rows();
    let scaling = fit_standardizer(features, &train_rows).stage("standardize")?;
    let xs = scaling.x.apply(&features.inputs);
    let ys = scaling.y.apply(&features.targets);
    let (x_tr, y_tr) = (select_rows(&xs, &train_rows), select_rows(&ys, &train_rows));

    let mut models = Vec::new();
    let mut cv = Vec::new();
    let mut failures = Vec::new();
    let mut loss_history = None;
    let mut mc_test = None;
    let mut mc_train = None;
    for &family in &params.models {
        match family {
            Family::Pcr | Family::Plsr => match fit_linear(family, &x_tr, &y_tr, &scaling, params) {
                Ok((m, r)) => {
                    models.push((family, m));
                    cv.push((family, r));
                }
                Err(e) => failures.push((family, e)),
            },
            Family::Ann => {
                let linear_in: Vec<String> = LINEAR_INPUTS.iter().map(|s| s.to_string()).collect();
                let linear_out: Vec<String> = LINEAR_TARGETS.iter().map(|s| s.to_string()).collect();
                let ci = column_indices(&features.input_names, &linear_in).stage("ann")?;
                let co = column_indices(&features.target_names, &linear_out).stage("ann")?;
                let sub = Scaling {
                    x: scaling.x.subset(&ci),
                    y: scaling.y.subset(&co),
                };
                let pick = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| {
                    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
                };
                let fit_rows = split.train_rows();
                let val_rows = split.validation_rows();
                let s = &params.ann;
                let mut sizes = vec![ci.len()];
                sizes.extend(&s.hidden);
                sizes.push(co.len());
                let result = (|| -> shipperf::Result<_> {
                    let mut mlp = mlp_init(&sizes, s.seed, s.prior, fit_rows.len())?;
                    mlp.scaling = sub.clone();
                    mlp.mc_passes = s.mc_passes;
                    let xv = pick(&xs, &val_rows, &ci);
                    let yv = pick(&ys, &val_rows, &co);
                    let validation = (!val_rows.is_empty()).then_some((&xv, &yv));
                    let history = train(&mut mlp, &pick(&xs, &fit_rows, &ci), &pick(&ys, &fit_rows, &co), validation, &s.train)?;
                    let passes = s.metrics_mc_passes.max(1);
                    let mc = |rows: &[usize]| -> shipperf::Result<DMatrix<f64>> {
                        let pred = predict_mc(&mlp, &pick(&xs, rows, &ci), passes, s.seed)?;
                        Ok(mlp.scaling.y.invert(&pred.mean))
                    };
                    let (mtr, mte) = (mc(&train_rows)?, mc(&test_rows)?);
                    Ok((mlp, history, mtr, mte))
                })();
                match result.stage("ann") {
                    Ok((mlp, history, mtr, mte)) => {
                        loss_history = Some(history);
                        mc_train = Some(mtr);
                        mc_test = Some(mte);
                        models.push((family, CalibratedModel::Ann(mlp)));
                    }
                    Err(e) => failures.push((family, e)),
                }
            }
        }
    }

    let mut columns = Vec::new();
    for (split_name, rows) in [("train", &train_rows), ("test", &test_rows)] {
        if rows.is_empty() {
            continue;
        }
        let x_raw = select_rows(&features.inputs, rows);
        let y_raw = select_rows(&features.targets, rows);
        for (family, model) in &models {
            let pred = model.predict(&features.input_names, &x_raw).stage("metrics")?;
            columns.push(metrics_column(family.name(), split_name, features, model.target_names(), &y_raw, &pred)?);
            if *family == Family::Ann {
                let mc = if split_name == "train" { &mc_train } else { &mc_test };
                if let Some(mc) = mc {
                    columns.push(metrics_column("ann_mc", split_name, features, model.target_names(), &y_raw, mc)?);
                }
            }
        }
    }
    Ok(Calibrated {
        models,
        cv,
        loss_history,
        metrics: MetricsTable {
            target_names: features.target_names.clone(),
            columns,
        },
        failures,
    })
}

fn metrics_column(
    model: &str,
    split: &str,
    features: &FeatureMatrix,
    predicted_names: &[String],
    y_raw: &DMatrix<f64>,
    pred: &DMatrix<f64>,
) -> StageResult<MetricsColumn> {
    let cols = column_indices(&features.target_names, predicted_names).stage("metrics")?;
    let truth = DMatrix::from_fn(y_raw.nrows(), cols.len(), |r, c| y_raw[(r, cols[c])]);
    let per = regression_metrics(&truth, pred).stage("metrics")?;
    let mut targets = vec![None; features.target_names.len()];
    for (slot, m) in cols.into_iter().zip(per) {
        targets[slot] = Some(m);
    }
    Ok(MetricsColumn {
        model: model.to_string(),
        split: split.to_string(),
        targets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportParams {
    pub settings: ReportSettings,
    /// constant rpm of the trend scenario; the ship's NCR when absent
    pub rpm: Option<f64>,
    /// constant mean draft; the ballast draft when absent
    pub draft: Option<f64>,
    pub step_days: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            settings: ReportSettings::default(),
            rpm: None,
            draft: None,
            step_days: 1.0,
        }
    }
}

pub fn trend_scenario(fouling: &FoulingSeries, ship: &ShipConfig, params: &ReportParams) -> StageResult<TrendScenario> {
    let step = Duration::seconds((params.step_days * 86400.0).round() as i64);
    TrendScenario::stepped(
        params.rpm.unwrap_or(ship.ncr_rpm),
        params.draft.unwrap_or(ship.ballast_draft),
        fouling,
        step,
    )
    .stage("trend")
}

pub fn report(
    models: &[(Family, CalibratedModel)],
    fouling: &FoulingSeries,
    events: &[CleaningEvent],
    delta_cf: &[DeltaCfSample],
    ship: &ShipConfig,
    params: &ReportParams,
    provenance: ReportProvenance,
) -> StageResult<PerformanceReport> {
    let scenario = trend_scenario(fouling, ship, params)?;
    let named: Vec<NamedModel> = models
        .iter()
        .map(|(f, m)| NamedModel {
            name: f.name(),
            model: m,
            pathways: None,
        })
        .collect();
    build_report(&named, &scenario, events, Some(delta_cf), ship, &params.settings, provenance).stage("report")
}
