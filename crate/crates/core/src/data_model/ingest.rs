//! CSV ingestion and emission for voyage samples and cleaning events.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::types::{CleaningEvent, EventKind, VoyageSample};
use crate::{Error, Result};

pub const REQUIRED_FIELDS: [&str; 10] = [
    "timestamp",
    "shaft_rpm",
    "shaft_power",
    "gps_speed",
    "log_speed",
    "draft_fore",
    "draft_aft",
    "latitude",
    "longitude",
    "heading",
];

pub const ENVIRONMENT_FIELDS: [&str; 6] = [
    "long_wind_speed",
    "trans_wind_speed",
    "long_current_speed",
    "sig_wave_height",
    "rel_mean_wave_dir",
    "mean_wave_period",
];

pub const OPTIONAL_FIELDS: [&str; 3] = ["cargo_weight", "rel_wind_speed", "rel_wind_dir"];

/// Where the ship-frame environment fields come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentSource {
    /// Read from CSV columns (already merged upstream).
    #[default]
    Columns,
    /// Left at zero; filled later by a hindcast merge.
    Hindcast,
}

/// Maps sample fields to CSV header names. Unmapped fields use their own name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VoyageSchema {
    #[serde(default)]
    pub columns: HashMap<String, String>,
    #[serde(default)]
    pub environment: EnvironmentSource,
}

impl VoyageSchema {
    pub fn column<'a>(&'a self, field: &'a str) -> &'a str {
        self.columns.get(field).map(String::as_str).unwrap_or(field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRow {
    /// 1-based line number in the file, header included.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub samples: Vec<VoyageSample>,
    pub dropped: Vec<DroppedRow>,
}

impl LoadReport {
    pub fn dropped_count(&self) -> usize {
        self.dropped.len()
    }
}

/// Parses ISO-8601 UTC timestamps, with or without an offset, or a bare date.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub fn load_voyage_csv(path: impl AsRef<Path>, schema: &VoyageSchema) -> Result<LoadReport> {
    let path = path.as_ref();
    read_voyage_csv(open(path)?, schema)
}

pub fn read_voyage_csv<R: Read>(reader: R, schema: &VoyageSchema) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index_of = |field: &str| headers.iter().position(|h| h == schema.column(field));

    let mut idx: HashMap<&str, usize> = HashMap::new();
    let mut required: Vec<&str> = REQUIRED_FIELDS.to_vec();
    if schema.environment == EnvironmentSource::Columns {
        required.extend(ENVIRONMENT_FIELDS);
    }
    for field in &required {
        let i = index_of(field).ok_or_else(|| Error::Schema(schema.column(field).to_string()))?;
        idx.insert(field, i);
    }
    for field in OPTIONAL_FIELDS {
        if let Some(i) = index_of(field) {
            idx.insert(field, i);
        }
    }

    let mut samples = Vec::new();
    let mut dropped = Vec::new();
    let mut rows = 0usize;
    for (n, record) in rdr.records().enumerate() {
        let record = record?;
        rows += 1;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(n + 2);
        match parse_row(&record, &idx) {
            Ok(s) => match s.check() {
                Ok(()) => samples.push(s),
                Err(reason) => dropped.push(DroppedRow { line, reason }),
            },
            Err(reason) => dropped.push(DroppedRow { line, reason }),
        }
    }
    if rows == 0 {
        return Err(Error::EmptyDataset("voyage CSV has no data rows".into()));
    }

    samples.sort_by_key(|s| s.timestamp);
    let mut unique: Vec<VoyageSample> = Vec::with_capacity(samples.len());
    for s in samples {
        if unique.last().is_some_and(|prev| prev.timestamp == s.timestamp) {
            dropped.push(DroppedRow {
                line: 0,
                reason: format!("duplicate timestamp {}", format_timestamp(&s.timestamp)),
            });
        } else {
            unique.push(s);
        }
    }
    Ok(LoadReport {
        samples: unique,
        dropped,
    })
}

fn parse_row(record: &csv::StringRecord, idx: &HashMap<&str, usize>) -> std::result::Result<VoyageSample, String> {
    let text = |field: &str| idx.get(field).and_then(|&i| record.get(i)).unwrap_or("");
    let num = |field: &str| -> std::result::Result<f64, String> {
        if !idx.contains_key(field) {
            return Ok(0.0);
        }
        let raw = text(field);
        let v: f64 = raw.parse().map_err(|_| format!("{field}: cannot parse `{raw}`"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{field}: non-finite value `{raw}`"))
        }
    };
    let opt = |field: &str| -> std::result::Result<Option<f64>, String> {
        match idx.get(field) {
            None => Ok(None),
            Some(_) => {
                let raw = text(field);
                if raw.is_empty() || raw.eq_ignore_ascii_case("nan") || raw.eq_ignore_ascii_case("na") {
                    Ok(None)
                } else {
                    raw.parse().map(Some).map_err(|_| format!("{field}: cannot parse `{raw}`"))
                }
            }
        }
    };
    let timestamp = parse_timestamp(text("timestamp")).ok_or_else(|| format!("timestamp: cannot parse `{}`", text("timestamp")))?;
    Ok(VoyageSample {
        timestamp,
        shaft_rpm: num("shaft_rpm")?,
        shaft_power: num("shaft_power")?,
        gps_speed: num("gps_speed")?,
        log_speed: num("log_speed")?,
        draft_fore: num("draft_fore")?,
        draft_aft: num("draft_aft")?,
        latitude: num("latitude")?,
        longitude: num("longitude")?,
        heading: num("heading")?,
        cargo_weight: opt("cargo_weight")?,
        long_wind_speed: num("long_wind_speed")?,
        trans_wind_speed: num("trans_wind_speed")?,
        long_current_speed: num("long_current_speed")?,
        sig_wave_height: num("sig_wave_height")?,
        rel_mean_wave_dir: num("rel_mean_wave_dir")?,
        mean_wave_period: num("mean_wave_period")?,
        rel_wind_speed: opt("rel_wind_speed")?,
        rel_wind_dir: opt("rel_wind_dir")?,
    })
}

/// Writes samples with the default column names; the output loads back identically.
pub fn write_voyage_csv<W: Write>(writer: W, samples: &[VoyageSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = REQUIRED_FIELDS.to_vec();
    header.extend(ENVIRONMENT_FIELDS);
    header.extend(OPTIONAL_FIELDS);
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in samples {
        w.write_record([
            format_timestamp(&s.timestamp),
            s.shaft_rpm.to_string(),
            s.shaft_power.to_string(),
            s.gps_speed.to_string(),
            s.log_speed.to_string(),
            s.draft_fore.to_string(),
            s.draft_aft.to_string(),
            s.latitude.to_string(),
            s.longitude.to_string(),
            s.heading.to_string(),
            s.long_wind_speed.to_string(),
            s.trans_wind_speed.to_string(),
            s.long_current_speed.to_string(),
            s.sig_wave_height.to_string(),
            s.rel_mean_wave_dir.to_string(),
            s.mean_wave_period.to_string(),
            opt(s.cargo_weight),
            opt(s.rel_wind_speed),
            opt(s.rel_wind_dir),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<voyage csv>", e))?;
    Ok(())
}

pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<CleaningEvent>> {
    let path = path.as_ref();
    read_events(open(path)?)
}

/// Reads `timestamp,kind` rows; a leading `timestamp,kind` header is optional.
pub fn read_events<R: Read>(reader: R) -> Result<Vec<CleaningEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut events = Vec::new();
    for (n, record) in rdr.records().enumerate() {
        let record = record?;
        let ts = record.get(0).unwrap_or("");
        let kind = record.get(1).unwrap_or("");
        if n == 0 && ts.eq_ignore_ascii_case("timestamp") {
            continue;
        }
        let timestamp = parse_timestamp(ts)
            .ok_or_else(|| Error::Validation(format!("event row {}: cannot parse timestamp `{ts}`", n + 1)))?;
        let kind: EventKind = kind.parse()?;
        events.push(CleaningEvent { timestamp, kind });
    }
    events.sort_by_key(|e| e.timestamp);
    Ok(events)
}

pub fn write_events<W: Write>(writer: W, events: &[CleaningEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "kind"])?;
    for e in events {
        w.write_record([format_timestamp(&e.timestamp), e.kind.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<events csv>", e))?;
    Ok(())
}
