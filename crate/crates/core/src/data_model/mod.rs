//! Domain types, dataset ingestion from CSV, hindcast grids and the cleaning-event calendar.

pub mod hindcast;
pub mod ingest;
pub mod types;

pub use hindcast::{
    apparent_wind, interpolate_hindcast, merge_hindcast, EarthConditions, HindcastGrid, HindcastSet,
    ShipFrameConditions, TrackPoint,
};
pub use ingest::{
    format_timestamp, load_events, load_voyage_csv, parse_timestamp, read_events, read_voyage_csv, write_events,
    write_voyage_csv, EnvironmentSource, LoadReport, VoyageSchema,
};
pub use types::{
    CleaningEvent, EventKind, PropulsiveEfficiency, ResistanceCoefficients, ShipConfig, Lookup1d, VoyageSample,
    WettedSurfaceTable,
};

/// Index of the leg each timestamp belongs to: the number of events at or before it.
pub fn leg_index(events: &[CleaningEvent], t: chrono::DateTime<chrono::Utc>) -> usize {
    events.partition_point(|e| e.timestamp <= t)
}
