//! The six subcommands. Each reads its inputs from disk, runs the in-memory
//! stage and writes its outputs under `<out>/<command>/`.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use shipperf::data_model::hindcast::HINDCAST_VARIABLES;
use shipperf::data_model::{
    format_timestamp, load_events, load_voyage_csv, merge_hindcast, parse_timestamp, write_events, write_voyage_csv,
    CleaningEvent, HindcastSet, ShipConfig, VoyageSample,
};
use shipperf::fouling::{write_delta_cf_csv, AdmiraltyModel, AdmiraltySeries, FoulingSeries, LegTrends};
use shipperf::performance::{
    fgf_at, predict_calm_water_curves, predict_trends, CalibratedModel, CurveCondition, CurvePrediction, ModelInfo,
    ReportProvenance, TrendPrediction, TrendScenario, POWER_TARGET,
};
use shipperf::preprocessing::{quasi_steady_filter, FeatureOptions, HindcastValidation};
use shipperf::synth::generate;
use shipperf::{Error, Result};

use crate::artifacts::{read_json, read_stage_json, ManifestEntry, Provenance, StageWriter};
use crate::config::Loaded;
use crate::pipeline::{self, delta_cf_series, Family, InStage, MetricsTable, StageResult};
use crate::svg::{Chart, Series};

/// What a command produced, for the terminal.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub dir: std::path::PathBuf,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

/// A loaded configuration together with its hash.
pub struct Run {
    pub loaded: Loaded,
    pub config_sha256: String,
}

impl Run {
    pub fn new(loaded: Loaded) -> Self {
        let config_sha256 = loaded.hash();
        Self { loaded, config_sha256 }
    }

    fn seed(&self) -> u64 {
        self.loaded.config.seed
    }

    fn writer(&self, command: &'static str) -> StageResult<StageWriter> {
        let prov = Provenance::new(command, &self.config_sha256, self.seed());
        StageWriter::create(self.loaded.stage_dir(command), prov).stage(command)
    }

    fn ship(&self) -> StageResult<ShipConfig> {
        let ship: ShipConfig = read_json(&self.loaded.ship_path()).stage("ship")?;
        ship.validate().stage("ship")?;
        Ok(ship)
    }

    fn events(&self) -> StageResult<Vec<CleaningEvent>> {
        load_events(self.loaded.events_path()).stage("events")
    }

    fn hindcast(&self) -> StageResult<Option<HindcastSet>> {
        self.loaded
            .hindcast_dir()
            .map(|d| HindcastSet::load_dir(d).stage("hindcast"))
            .transpose()
    }

    fn samples(&self) -> StageResult<(Vec<VoyageSample>, usize)> {
        let r = load_voyage_csv(self.loaded.data_path(), &self.loaded.config.schema).stage("data")?;
        Ok((r.samples, r.dropped.len()))
    }

    fn fouling(&self) -> StageResult<FoulingSeries> {
        read_stage_json(&self.loaded.stage_dir("preprocess"), "fouling.json", "preprocess").stage("preprocess")
    }

    fn feature_options(&self) -> StageResult<FeatureOptions> {
        #[derive(Deserialize)]
        struct Head {
            options: FeatureOptions,
        }
        let h: Head = read_stage_json(&self.loaded.stage_dir("preprocess"), "features.json", "preprocess").stage("preprocess")?;
        Ok(h.options)
    }

    /// Calibrated models that are both enabled and present, in the configured order.
    fn models(&self) -> StageResult<Vec<(Family, CalibratedModel)>> {
        let dir = self.loaded.stage_dir("calibrate");
        let summary: CalibrationSummary = read_stage_json(&dir, "summary.json", "calibrate").stage("calibrate")?;
        let mut out = Vec::new();
        for &f in &self.loaded.config.models {
            if summary.fitted.contains(&f) {
                let m: CalibratedModel = read_json(&dir.join(model_file(f))).stage("calibrate")?;
                out.push((f, m));
            }
        }
        if out.is_empty() {
            let enabled: Vec<&str> = self.loaded.config.models.iter().map(|f| f.name()).collect();
            return Err(Error::Config(format!("no calibrated model among the enabled ones ({})", enabled.join(","))))
                .stage("calibrate");
        }
        Ok(out)
    }
}

fn model_file(f: Family) -> String {
    format!("model_{}.json", f.name())
}

fn outcome(w: StageWriter, notes: Vec<String>) -> Outcome {
    Outcome {
        dir: w.dir,
        files: w.written.into_iter().map(|e| e.file).collect(),
        notes,
    }
}

fn csv_body(buf: &mut Vec<u8>, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io("csv buffer", e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn synth(run: &Run) -> StageResult<Outcome> {
    let c = &run.loaded.config;
    let mut sc = c.synth.scenario.clone();
    if let Some(k) = c.synth.calibrate_event {
        sc = sc.calibrated_to_event(k, c.synth.target_kw).stage("synth")?;
    }
    let out = generate(&sc).stage("synth")?;
    let mut w = run.writer("synth")?;
    (|| -> Result<()> {
        w.csv("voyage.csv", |b| write_voyage_csv(b, &out.samples))?;
        w.csv("events.csv", |b| write_events(b, &out.events))?;
        for name in HINDCAST_VARIABLES {
            let grid = out.hindcast.grid(name).expect("generator emits every hindcast variable");
            w.csv(&format!("hindcast/{name}.csv"), |b| grid.write_csv(b))?;
        }
        w.json("ship.json", &sc.ship)?;
        w.json("scenario.json", &sc)?;
        w.json("truth.json", &out.truth)?;
        w.csv("truth_samples.csv", |b| out.truth.write_samples_csv(b))
    })()
    .stage("synth")?;
    let notes = out
        .truth
        .events
        .iter()
        .map(|e| format!("true ΔP at {} ({}): {:.1} kW", format_timestamp(&e.timestamp), e.kind, e.delta_power_kw))
        .collect();
    Ok(outcome(w, notes))
}

#[derive(Serialize)]
struct HindcastArtifact {
    /// `hindcast` when grids were merged, `columns` when the data carried its own
    source: &'static str,
    validation: Option<HindcastValidation>,
}

#[derive(Serialize)]
struct AdmiraltyArtifact<'a> {
    model: &'a AdmiraltyModel,
    points_used: usize,
    voyages: &'a AdmiraltySeries,
    legs: &'a LegTrends,
}

/// The hash list written last by `preprocess`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
    pub samples: usize,
    pub dropped_rows: usize,
    pub model_rows: usize,
}

pub fn preprocess(run: &Run) -> StageResult<Outcome> {
    let ship = run.ship()?;
    let events = run.events()?;
    let hindcast = run.hindcast()?;
    let (samples, dropped) = run.samples()?;
    let n = samples.len();
    let p = pipeline::preprocess(samples, &events, hindcast.as_ref(), &ship, &run.loaded.config.preprocess)?;

    let mut w = run.writer("preprocess")?;
    let mut in_model = vec![false; n];
    for &i in &p.rows {
        in_model[i] = true;
    }
    (|| -> Result<()> {
        let ts = |i: usize| format_timestamp(&p.samples[i].timestamp);
        w.csv("quasi_steady_mask.csv", |b| {
            let rows = (0..n).map(|i| vec![ts(i), p.steady[i].to_string(), in_model[i].to_string()]);
            csv_body(b, &["timestamp", "steady", "model_row"], rows)
        })?;
        let source = if hindcast.is_some() { "hindcast" } else { "columns" };
        w.json(
            "hindcast_validation.json",
            &HindcastArtifact {
                source,
                validation: p.validation.clone(),
            },
        )?;
        w.csv("near_calm.csv", |b| {
            let rows = (0..n).map(|i| vec![ts(i), p.near_calm[i].to_string(), opt(p.corrected_power[i])]);
            csv_body(b, &["timestamp", "near_calm", "corrected_power"], rows)
        })?;
        w.json(
            "admiralty.json",
            &AdmiraltyArtifact {
                model: &p.admiralty,
                points_used: p.admiralty_points,
                voyages: &p.series,
                legs: &p.legs,
            },
        )?;
        w.json("fouling.json", &p.fouling)?;
        w.json("features.json", &p.features)?;
        w.json("split.json", &p.split)?;
        let manifest = Manifest {
            artifacts: w.written.clone(),
            samples: n,
            dropped_rows: dropped,
            model_rows: p.rows.len(),
        };
        w.json("manifest.json", &manifest)
    })()
    .stage("preprocess")?;
    let mut notes = vec![format!(
        "{n} samples, {} model rows, {dropped} rows dropped on load; admiralty m = {:.3}, n = {:.3}",
        p.rows.len(),
        p.admiralty.m_exp,
        p.admiralty.n_exp
    )];
    notes.extend(p.split.warnings.iter().cloned());
    Ok(outcome(w, notes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub model: Family,
    pub error: String,
}

/// Which models `calibrate` produced; later stages load only these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub fitted: Vec<Family>,
    pub selected_components: Vec<(Family, usize)>,
    pub failures: Vec<Failure>,
}

fn write_metrics(buf: &mut Vec<u8>, table: &MetricsTable) -> Result<()> {
    let mut models: Vec<&str> = Vec::new();
    for c in &table.columns {
        if !models.contains(&c.model.as_str()) {
            models.push(&c.model);
        }
    }
    let mut splits: Vec<&str> = Vec::new();
    for c in &table.columns {
        if !splits.contains(&c.split.as_str()) {
            splits.push(&c.split);
        }
    }
    let mut header = vec!["target".to_string(), "split".to_string()];
    for m in &models {
        header.extend(["mae", "rmse", "r2"].iter().map(|k| format!("{m}_{k}")));
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(&header)?;
    for (t, target) in table.target_names.iter().enumerate() {
        for split in &splits {
            let mut rec = vec![target.clone(), split.to_string()];
            for m in &models {
                let cell = table
                    .columns
                    .iter()
                    .find(|c| c.model == *m && c.split == *split)
                    .and_then(|c| c.targets[t].as_ref());
                match cell {
                    Some(x) => rec.extend([x.mae.to_string(), x.rmse.to_string(), x.r2.to_string()]),
                    None => rec.extend([String::new(), String::new(), String::new()]),
                }
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("metrics csv", e))
}

pub fn calibrate(run: &Run) -> StageResult<Outcome> {
    let pre = run.loaded.stage_dir("preprocess");
    let features = read_stage_json(&pre, "features.json", "preprocess").stage("preprocess")?;
    let split = read_stage_json(&pre, "split.json", "preprocess").stage("preprocess")?;
    let cal = pipeline::calibrate(&features, &split, &run.loaded.config.calibrate)?;

    let mut w = run.writer("calibrate")?;
    // Outputs of an earlier run must not outlive a model that now fails.
    for f in Family::ALL {
        for name in [model_file(f), format!("cv_{}.json", f.name()), format!("cv_{}.csv", f.name())] {
            let _ = std::fs::remove_file(w.path(&name));
        }
    }
    let _ = std::fs::remove_file(w.path("loss_history.csv"));

    let summary = CalibrationSummary {
        fitted: cal.models.iter().map(|(f, _)| *f).collect(),
        selected_components: cal.cv.iter().map(|(f, r)| (*f, r.selected_components)).collect(),
        failures: cal
            .failures
            .iter()
            .map(|(f, e)| Failure {
                model: *f,
                error: e.to_string(),
            })
            .collect(),
    };
    (|| -> Result<()> {
        for (f, m) in &cal.models {
            w.json(&model_file(*f), m)?;
        }
        for (f, r) in &cal.cv {
            w.json(&format!("cv_{}.json", f.name()), r)?;
            w.csv(&format!("cv_{}.csv", f.name()), |b| r.write_csv(b, &features.target_names))?;
        }
        w.csv("metrics.csv", |b| write_metrics(b, &cal.metrics))?;
        w.json("metrics.json", &cal.metrics)?;
        if let Some(h) = &cal.loss_history {
            w.csv("loss_history.csv", |b| h.write_csv(b))?;
        }
        w.json("summary.json", &summary)
    })()
    .stage("calibrate")?;

    let mut notes: Vec<String> = cal
        .cv
        .iter()
        .map(|(f, r)| {
            let mut s = format!("{}: {} components", f.name(), r.selected_components);
            if let Some(why) = &r.stopped_early {
                s.push_str(&format!(" ({why})"));
            }
            s
        })
        .collect();
    notes.extend(summary.failures.iter().map(|x| format!("{} failed: {}", x.model.name(), x.error)));
    if cal.models.is_empty() {
        let (_, first) = cal.failures.into_iter().next().expect("a model was requested");
        return Err(first);
    }
    Ok(outcome(w, notes))
}

fn days_since(t0: DateTime<Utc>, ts: &[DateTime<Utc>]) -> Vec<f64> {
    ts.iter().map(|t| (*t - t0).num_seconds() as f64 / 86400.0).collect()
}

fn trend_chart(name: &str, pred: &TrendPrediction) -> Chart {
    let t0 = pred.timeline.first().copied().unwrap_or_default();
    let x = days_since(t0, &pred.timeline);
    let power = pred.series(POWER_TARGET).map(<[f64]>::to_vec).unwrap_or_default();
    Chart {
        title: format!("{name}: calm-water power trend"),
        x_label: format!("days since {}", format_timestamp(&t0)),
        y_label: "shaft power [kW]".into(),
        series: vec![Series::line(name, x, power)],
    }
}

fn write_trends(
    w: &mut StageWriter,
    models: &[(Family, CalibratedModel)],
    scenario: &TrendScenario,
    options: &FeatureOptions,
) -> StageResult<Vec<String>> {
    let mut notes = Vec::new();
    for (f, m) in models {
        let pred = predict_trends(m, scenario, options).stage("trend")?;
        if pred.clamped_negative > 0 {
            notes.push(format!("{}: {} negative cubed speeds clamped to zero", f.name(), pred.clamped_negative));
        }
        let svg = trend_chart(f.name(), &pred).render();
        (|| -> Result<()> {
            w.csv(&format!("trend_{}.csv", f.name()), |b| pred.write_csv(b))?;
            w.svg(&format!("trend_{}.svg", f.name()), &svg)
        })()
        .stage("trend")?;
    }
    Ok(notes)
}

pub fn trend(run: &Run) -> StageResult<Outcome> {
    let ship = run.ship()?;
    let fouling = run.fouling()?;
    let options = run.feature_options()?;
    let models = run.models()?;
    let scenario = pipeline::trend_scenario(&fouling, &ship, &run.loaded.config.report)?;
    let mut w = run.writer("trend")?;
    let notes = write_trends(&mut w, &models, &scenario, &options)?;
    Ok(outcome(w, notes))
}

/// Before and after curves in one table, one row per sweep point.
fn write_curves(buf: &mut Vec<u8>, groups: &[(&str, &[CurvePrediction])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["phase", "pathway", "fgf", "rpm", "speed", "power", "lo", "hi"])?;
    for (phase, curves) in groups {
        for c in *curves {
            for i in 0..c.speed.len() {
                let band = |b: &Option<Vec<f64>>| b.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
                w.write_record([
                    phase.to_string(),
                    c.pathway.label().to_string(),
                    c.condition.fgf.to_string(),
                    c.rpm[i].to_string(),
                    c.speed[i].to_string(),
                    c.power[i].to_string(),
                    band(&c.lower),
                    band(&c.upper),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("curve csv", e))
}

fn curve_chart(title: String, groups: &[(&str, &[CurvePrediction])]) -> Chart {
    let mut series = Vec::new();
    for (k, (phase, curves)) in groups.iter().enumerate() {
        for c in *curves {
            let mut s = Series::line(format!("{phase} {}", c.pathway.label()), c.speed.clone(), c.power.clone());
            s.band = c.lower.clone().zip(c.upper.clone());
            s.dashed = k > 0;
            series.push(s);
        }
    }
    Chart {
        title,
        x_label: "speed [kn]".into(),
        y_label: "shaft power [kW]".into(),
        series,
    }
}

pub fn report(run: &Run) -> StageResult<Outcome> {
    let c = &run.loaded.config;
    let ship = run.ship()?;
    let events = run.events()?;
    let hindcast = run.hindcast()?;
    let fouling = run.fouling()?;
    let options = run.feature_options()?;
    let models = run.models()?;

    // ΔC_F needs the merged environment of every sample, which the
    // preprocess artifacts do not keep.
    let (mut samples, _) = run.samples()?;
    if let Some(h) = &hindcast {
        merge_hindcast(&mut samples, h).stage("hindcast")?;
    }
    let steady = quasi_steady_filter(&samples, &c.preprocess.quasi_steady).stage("quasi_steady")?;
    let dcf = delta_cf_series(&samples, &steady, &ship);

    let provenance = ReportProvenance {
        models: models
            .iter()
            .map(|(f, m)| ModelInfo {
                name: f.name().into(),
                family: m.family().into(),
                version: m.version(),
            })
            .collect(),
        config_sha256: Some(run.config_sha256.clone()),
        seeds: Provenance::new("report", "", run.seed()).seeds,
    };
    let rep = pipeline::report(&models, &fouling, &events, &dcf, &ship, &c.report, provenance)?;
    let scenario = pipeline::trend_scenario(&fouling, &ship, &c.report)?;

    let mut w = run.writer("report")?;
    (|| -> Result<()> {
        w.csv("report.csv", |b| rep.write_csv(b))?;
        w.json("report.json", &rep)?;
        w.csv("delta_cf.csv", |b| write_delta_cf_csv(b, &dcf))
    })()
    .stage("report")?;
    let mut notes = write_trends(&mut w, &models, &scenario, &options)?;
    for rc in &rep.curves {
        let groups: [(&str, &[CurvePrediction]); 2] = [("before", &rc.before), ("after", &rc.after)];
        let stem = format!("curves/{}_{}", rc.row, rc.model);
        let svg = curve_chart(format!("{} {}: calm-water curves", rc.model, rc.row), &groups).render();
        (|| -> Result<()> {
            w.csv(&format!("{stem}.csv"), |b| write_curves(b, &groups))?;
            w.svg(&format!("{stem}.svg"), &svg)
        })()
        .stage("report")?;
    }
    for row in &rep.rows {
        for cell in &row.cells {
            if let Some(note) = &cell.note {
                notes.push(format!("{} {}: {note}", row.id, cell.column));
            }
        }
    }
    notes.sort();
    notes.dedup();
    Ok(outcome(w, notes))
}

fn curve_instant(at: &str, fouling: &FoulingSeries) -> Result<DateTime<Utc>> {
    let (Some(first), Some(last)) = (fouling.timestamps.first(), fouling.timestamps.last()) else {
        return Err(Error::EmptyDataset("fouling series".into()));
    };
    match at.trim() {
        "start" => Ok(*first),
        "end" => Ok(*last),
        s => parse_timestamp(s).ok_or_else(|| Error::Config(format!("curve.at `{s}` is not start, end or a timestamp"))),
    }
}

pub fn curve(run: &Run) -> StageResult<Outcome> {
    let cc = &run.loaded.config.curve;
    let ship = run.ship()?;
    let fouling = run.fouling()?;
    let models = run.models()?;
    let t = curve_instant(&cc.at, &fouling).stage("curve")?;
    let condition = CurveCondition {
        timestamp: t,
        mean_draft: cc.draft.unwrap_or(ship.ballast_draft),
        trim: cc.trim,
        fgf: fgf_at(&fouling, t).stage("curve")?,
    };
    let mut w = run.writer("curve")?;
    let mut notes = Vec::new();
    for (f, m) in &models {
        let curves = predict_calm_water_curves(m, &condition, &cc.options).stage("curve")?;
        for c in &curves {
            notes.extend(c.warnings.iter().map(|x| format!("{} {}: {x}", f.name(), c.pathway.label())));
        }
        let groups: [(&str, &[CurvePrediction]); 1] = [("at", &curves)];
        let title = format!("{} at {} (fgf {:.4})", f.name(), format_timestamp(&t), condition.fgf);
        let svg = curve_chart(title, &groups).render();
        (|| -> Result<()> {
            w.csv(&format!("curve_{}.csv", f.name()), |b| write_curves(b, &groups))?;
            w.svg(&format!("curve_{}.svg", f.name()), &svg)
        })()
        .stage("curve")?;
    }
    notes.sort();
    notes.dedup();
    Ok(outcome(w, notes))
}

/// Runs a command by name.
pub fn dispatch(command: &str, run: &Run) -> StageResult<Outcome> {
    match command {
        "synth" => synth(run),
        "preprocess" => preprocess(run),
        "calibrate" => calibrate(run),
        "trend" => trend(run),
        "report" => report(run),
        "curve" => curve(run),
        other => Err(Error::Config(format!("unknown command `{other}`"))).stage("cli"),
    }
}

