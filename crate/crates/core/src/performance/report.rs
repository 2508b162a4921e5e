use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::curve::{delta_power_between, event_conditions, CurveCondition, CurveOptions, CurvePrediction, PowerDelta};
use super::model::{CalibratedModel, SpeedPathway};
use super::trend::TrendScenario;
use crate::data_model::{format_timestamp, CleaningEvent, EventKind, ShipConfig};
use crate::fouling::{delta_power_from_delta_cf, delta_power_start_end, DeltaCfSample};
use crate::{Error, Result};

pub const DELTA_CF_COLUMN: &str = "delta_cf";
pub const START_END_ROW: &str = "start_vs_end";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportSettings {
    /// knots
    pub service_speed: f64,
    pub curve: CurveOptions,
    pub delta_cf_window_days: f64,
    pub delta_cf_min_samples: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            service_speed: 14.5,
            curve: CurveOptions::default(),
            delta_cf_window_days: 14.0,
            delta_cf_min_samples: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub column: String,
    /// kW; absent when the value could not be computed (see `note`)
    pub delta_kw: Option<f64>,
    /// true when less power is needed afterwards
    pub improvement: Option<bool>,
    pub extrapolated: bool,
    pub note: Option<String>,
}

impl ReportCell {
    fn value(column: String, delta_kw: f64, extrapolated: bool, note: Option<String>) -> Self {
        Self {
            column,
            delta_kw: Some(delta_kw),
            improvement: Some(delta_kw < 0.0),
            extrapolated,
            note,
        }
    }

    fn missing(column: String, note: String) -> Self {
        Self {
            column,
            delta_kw: None,
            improvement: None,
            extrapolated: false,
            note: Some(note),
        }
    }

    pub fn flag(&self) -> &'static str {
        match self.improvement {
            Some(true) => "improvement",
            Some(false) => "degradation",
            None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub kind: Option<EventKind>,
    pub timestamp: Option<DateTime<Utc>>,
    pub cells: Vec<ReportCell>,
}

impl ReportRow {
    pub fn cell(&self, column: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.column == column)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub family: String,
    pub version: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub models: Vec<ModelInfo>,
    pub config_sha256: Option<String>,
    pub seeds: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub service_speed: f64,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub provenance: ReportProvenance,
    /// before/after curves behind each model's cells
    #[serde(skip)]
    pub curves: Vec<RowCurves>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowCurves {
    pub row: String,
    pub model: String,
    pub before: Vec<CurvePrediction>,
    pub after: Vec<CurvePrediction>,
}

/// A calibrated model with the name its report columns are prefixed by.
pub struct NamedModel<'a> {
    pub name: &'a str,
    pub model: &'a CalibratedModel,
    /// pathways to report; `None` takes the model's report pathways
    pub pathways: Option<Vec<SpeedPathway>>,
}

impl NamedModel<'_> {
    fn pathways(&self) -> Vec<SpeedPathway> {
        let offered = self.model.pathways();
        match &self.pathways {
            Some(wanted) => offered.into_iter().filter(|p| wanted.contains(p)).collect(),
            None => self.model.report_pathways(),
        }
    }

    fn column(&self, p: SpeedPathway) -> String {
        format!("{}_{}", self.name, p.label())
    }
}

fn model_cells(m: &NamedModel, deltas: &[PowerDelta]) -> Vec<ReportCell> {
    m.pathways()
        .into_iter()
        .map(|p| match deltas.iter().find(|d| d.pathway == p) {
            Some(d) => {
                let note = (!d.warnings.is_empty()).then(|| d.warnings.join("; "));
                ReportCell::value(m.column(p), d.delta_kw, d.extrapolated, note)
            }
            None => ReportCell::missing(m.column(p), "pathway not predicted".into()),
        })
        .collect()
}

fn delta_cf_cell(result: Result<crate::fouling::DeltaPowerCf>) -> ReportCell {
    match result {
        Ok(d) => ReportCell::value(DELTA_CF_COLUMN.into(), d.delta_power, false, None),
        Err(e) => ReportCell::missing(DELTA_CF_COLUMN.into(), e.to_string()),
    }
}

/// ΔP per event and over the whole scenario, for every model pathway plus
/// the ΔC_F estimate. A ΔC_F value that cannot be formed is reported empty
/// with the reason.
pub fn build_report(
    models: &[NamedModel],
    scenario: &TrendScenario,
    events: &[CleaningEvent],
    delta_cf_series: Option<&[DeltaCfSample]>,
    ship: &ShipConfig,
    settings: &ReportSettings,
    mut provenance: ReportProvenance,
) -> Result<PerformanceReport> {
    if models.is_empty() {
        return Err(Error::Config("a report needs at least one model".into()));
    }
    let schema = models[0].model.input_names();
    if let Some(m) = models.iter().find(|m| !same_features(m.model.input_names(), schema)) {
        return Err(Error::Schema(format!(
            "model `{}` was calibrated on a different feature schema",
            m.name
        )));
    }
    let mut pairs: Vec<(CurveCondition, CurveCondition)> =
        events.iter().map(|e| event_conditions(scenario, e.timestamp)).collect::<Result<_>>()?;
    let last = scenario.timeline.len() - 1;
    let at = |i: usize| CurveCondition {
        timestamp: scenario.timeline[i],
        mean_draft: scenario.mean_draft,
        trim: 0.0,
        fgf: scenario.fgf[i],
    };
    pairs.push((at(0), at(last)));

    let mut rows: Vec<ReportRow> = events
        .iter()
        .enumerate()
        .map(|(i, e)| ReportRow {
            id: format!("event_{}", i + 1),
            kind: Some(e.kind),
            timestamp: Some(e.timestamp),
            cells: Vec::new(),
        })
        .collect();
    rows.push(ReportRow {
        id: START_END_ROW.into(),
        kind: None,
        timestamp: None,
        cells: Vec::new(),
    });

    let mut columns = Vec::new();
    let mut curves = Vec::new();
    for m in models {
        columns.extend(m.pathways().into_iter().map(|p| m.column(p)));
        for (row, (b, a)) in rows.iter_mut().zip(&pairs) {
            let (deltas, [before, after]) = delta_power_between(m.model, b, a, settings.service_speed, &settings.curve)?;
            row.cells.extend(model_cells(m, &deltas));
            curves.push(RowCurves {
                row: row.id.clone(),
                model: m.name.to_string(),
                before,
                after,
            });
        }
        provenance.models.push(ModelInfo {
            name: m.name.to_string(),
            family: m.model.family().to_string(),
            version: m.model.version(),
        });
    }

    columns.push(DELTA_CF_COLUMN.into());
    let n_events = events.len();
    for (i, row) in rows.iter_mut().enumerate() {
        let cell = match delta_cf_series {
            None => ReportCell::missing(DELTA_CF_COLUMN.into(), "no ΔC_F series supplied".into()),
            Some(series) if i < n_events => delta_cf_cell(delta_power_from_delta_cf(
                series,
                events[i].timestamp,
                ship,
                settings.delta_cf_window_days,
                settings.delta_cf_min_samples,
            )),
            Some(series) => delta_cf_cell(delta_power_start_end(
                series,
                ship,
                settings.delta_cf_window_days,
                settings.delta_cf_min_samples,
            )),
        };
        row.cells.push(cell);
    }
    provenance.seeds.push(("mc_seed".into(), settings.curve.mc_seed));
    Ok(PerformanceReport {
        service_speed: settings.service_speed,
        columns,
        rows,
        provenance,
        curves,
    })
}

/// Models share a schema when the narrower input set is contained in the wider.
fn same_features(a: &[String], b: &[String]) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().all(|n| large.contains(n))
}

impl PerformanceReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["row".to_string(), "kind".to_string(), "timestamp".to_string()];
        for c in &self.columns {
            header.push(format!("{c}_kw"));
            header.push(format!("{c}_flag"));
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.id.clone(),
                row.kind.map(|k| k.to_string()).unwrap_or_default(),
                row.timestamp.as_ref().map(format_timestamp).unwrap_or_default(),
            ];
            for c in &self.columns {
                match row.cell(c) {
                    Some(cell) => {
                        rec.push(cell.delta_kw.map(|v| format!("{v:.3}")).unwrap_or_default());
                        rec.push(cell.flag().to_string());
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("report csv", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fouling::resistance::tests::ship;
    use crate::fouling::FoulingSeries;
    use crate::performance::fixtures::exact_linear;
    use chrono::{Duration, TimeZone};

    fn scenario() -> (TrendScenario, Vec<CleaningEvent>) {
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let n = 200;
        let timestamps: Vec<_> = (0..n).map(|i| t0 + Duration::days(i)).collect();
        let e1 = t0 + Duration::days(60) + Duration::hours(12);
        let e2 = t0 + Duration::days(140) + Duration::hours(12);
        let total: Vec<f64> = timestamps
            .iter()
            .map(|&t| {
                let start = if t > e2 { e2 } else if t > e1 { e1 } else { t0 };
                (t - start).num_hours() as f64 * 1e-5
            })
            .collect();
        let f = FoulingSeries {
            timestamps: timestamps.clone(),
            static_hours: vec![0.0; n as usize],
            hull: total.clone(),
            propeller: vec![0.0; n as usize],
            total,
            leg_rates: vec![1.0; 3],
        };
        let events = vec![
            CleaningEvent {
                timestamp: e1,
                kind: EventKind::Propeller,
            },
            CleaningEvent {
                timestamp: e2,
                kind: EventKind::HullAndPropeller,
            },
        ];
        (TrendScenario::new(100.0, 7.0, timestamps, &f).unwrap(), events)
    }

    fn cf_series(events: &[CleaningEvent]) -> Vec<DeltaCfSample> {
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        (0..200 * 8)
            .map(|i| {
                let t = t0 + Duration::hours(3 * i);
                let leg = events.partition_point(|e| e.timestamp <= t) as f64;
                DeltaCfSample {
                    timestamp: t,
                    ct_data: 0.0,
                    ct_emp: 0.0,
                    delta_cf: 1e-4 * (3.0 - leg) + 1e-6 * (i % 7) as f64,
                    r_calm: 0.0,
                    r_wind: 0.0,
                    r_wave: 0.0,
                    r_others: 0.0,
                    wetted_surface: 7000.0,
                    surface_extrapolated: false,
                }
            })
            .collect()
    }

    #[test]
    fn layout_three_rows_seven_columns() {
        let (sc, events) = scenario();
        let models: Vec<CalibratedModel> = (0..3).map(|i| exact_linear(1e4 * (i + 1) as f64, 1.0)).collect();
        let names = ["pcr", "plsr", "ann"];
        let named: Vec<NamedModel> = models
            .iter()
            .zip(names)
            .map(|(m, name)| NamedModel {
                name,
                model: m,
                pathways: Some(vec![SpeedPathway::Gps, SpeedPathway::Log]),
            })
            .collect();
        let series = cf_series(&events);
        let settings = ReportSettings::default();
        let r = build_report(&named, &sc, &events, Some(&series), &ship(), &settings, ReportProvenance::default()).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.columns.len(), 7);
        assert_eq!(r.rows[2].id, START_END_ROW);
        for row in &r.rows {
            assert_eq!(row.cells.len(), 7);
            for c in &row.cells {
                let v = c.delta_kw.unwrap();
                assert_eq!(c.improvement, Some(v < 0.0));
            }
        }
        for (i, e) in events.iter().enumerate() {
            let direct = delta_power_from_delta_cf(&series, e.timestamp, &ship(), 14.0, 10).unwrap();
            assert_eq!(r.rows[i].cell(DELTA_CF_COLUMN).unwrap().delta_kw, Some(direct.delta_power));
        }
        // hull+propeller removes more fouling here than the propeller event
        let p1 = r.rows[0].cell("pcr_gps").unwrap().delta_kw.unwrap();
        let p2 = r.rows[1].cell("pcr_gps").unwrap().delta_kw.unwrap();
        assert!(p1 < 0.0 && p2 < p1);
        assert_eq!(r.provenance.models.len(), 3);

        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split(',').count(), 3 + 14);
        assert!(lines[1].contains("improvement"));
    }

    #[test]
    fn missing_delta_cf_is_reported_empty() {
        let (sc, events) = scenario();
        let m = exact_linear(1e4, 1.0);
        let named = [NamedModel {
            name: "pcr",
            model: &m,
            pathways: None,
        }];
        let short = &cf_series(&events)[..100];
        let r = build_report(&named, &sc, &events, Some(short), &ship(), &ReportSettings::default(), ReportProvenance::default()).unwrap();
        assert_eq!(r.columns, ["pcr_gps_cubed", "pcr_log_cubed", DELTA_CF_COLUMN]);
        let cell = r.rows[0].cell(DELTA_CF_COLUMN).unwrap();
        assert!(cell.delta_kw.is_none() && cell.note.is_some());
    }

    #[test]
    fn event_outside_timeline_errors() {
        let (sc, mut events) = scenario();
        events[0].timestamp = sc.timeline[0] - Duration::days(3);
        let m = exact_linear(1e4, 1.0);
        let named = [NamedModel {
            name: "pcr",
            model: &m,
            pathways: None,
        }];
        assert!(build_report(&named, &sc, &events, None, &ship(), &ReportSettings::default(), ReportProvenance::default()).is_err());
    }
}
