//! Gridded hindcast fields and their interpolation along a vessel track.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};

use super::ingest::{format_timestamp, parse_timestamp};
use super::types::VoyageSample;
use crate::{Error, Result, KNOT};

/// One scalar hindcast variable on a regular (time, lat, lon) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HindcastGrid {
    pub variable: String,
    /// seconds since the Unix epoch, strictly ascending
    times: Vec<f64>,
    lats: Vec<f64>,
    lons: Vec<f64>,
    /// `values[(it * lats.len() + ilat) * lons.len() + ilon]`
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub time: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
}

fn epoch_seconds(t: &DateTime<Utc>) -> f64 {
    t.timestamp() as f64 + f64::from(t.timestamp_subsec_nanos()) * 1e-9
}

fn strictly_ascending(axis: &[f64]) -> bool {
    axis.windows(2).all(|w| w[0] < w[1])
}

impl HindcastGrid {
    pub fn new(
        variable: impl Into<String>,
        times: Vec<DateTime<Utc>>,
        lats: Vec<f64>,
        lons: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let variable = variable.into();
        let times: Vec<f64> = times.iter().map(epoch_seconds).collect();
        for (name, axis) in [("time", &times), ("latitude", &lats), ("longitude", &lons)] {
            if axis.is_empty() || !strictly_ascending(axis) {
                return Err(Error::Validation(format!(
                    "hindcast `{variable}`: {name} axis must be non-empty and strictly ascending"
                )));
            }
        }
        if values.len() != times.len() * lats.len() * lons.len() {
            return Err(Error::Validation(format!(
                "hindcast `{variable}`: {} values for a {}x{}x{} grid",
                values.len(),
                times.len(),
                lats.len(),
                lons.len()
            )));
        }
        Ok(Self {
            variable,
            times,
            lats,
            lons,
            values,
        })
    }

    /// Builds a grid from unordered `(time, lat, lon, value)` quadruples covering a full grid.
    pub fn from_quadruples(variable: impl Into<String>, rows: &[(DateTime<Utc>, f64, f64, f64)]) -> Result<Self> {
        let variable = variable.into();
        if rows.is_empty() {
            return Err(Error::EmptyDataset(format!("hindcast `{variable}` has no rows")));
        }
        let mut times: Vec<DateTime<Utc>> = rows.iter().map(|r| r.0).collect();
        let mut lats: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let mut lons: Vec<f64> = rows.iter().map(|r| r.2).collect();
        times.sort();
        times.dedup();
        lats.sort_by(f64::total_cmp);
        lats.dedup();
        lons.sort_by(f64::total_cmp);
        lons.dedup();
        let (nt, ny, nx) = (times.len(), lats.len(), lons.len());
        let mut values = vec![f64::NAN; nt * ny * nx];
        let mut filled = vec![false; values.len()];
        for &(t, lat, lon, v) in rows {
            let it = times.binary_search(&t).unwrap_or_default();
            let iy = lats.binary_search_by(|p| p.total_cmp(&lat)).unwrap_or_default();
            let ix = lons.binary_search_by(|p| p.total_cmp(&lon)).unwrap_or_default();
            let k = (it * ny + iy) * nx + ix;
            if filled[k] {
                return Err(Error::Validation(format!(
                    "hindcast `{variable}`: duplicate coordinate ({}, {lat}, {lon})",
                    format_timestamp(&t)
                )));
            }
            filled[k] = true;
            values[k] = v;
        }
        if let Some(k) = filled.iter().position(|f| !f) {
            return Err(Error::Validation(format!(
                "hindcast `{variable}`: grid node {k} has no value (incomplete grid)"
            )));
        }
        Self::new(variable, times, lats, lons, values)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.times.len(), self.lats.len(), self.lons.len())
    }

    /// Spatial resolution in degrees (latitude step, longitude step).
    pub fn spatial_resolution(&self) -> (f64, f64) {
        let step = |a: &[f64]| if a.len() > 1 { a[1] - a[0] } else { 0.0 };
        (step(&self.lats), step(&self.lons))
    }

    /// Temporal resolution in seconds.
    pub fn temporal_resolution(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn node(&self, it: usize, ilat: usize, ilon: usize) -> f64 {
        self.values[(it * self.lats.len() + ilat) * self.lons.len() + ilon]
    }

    pub fn node_coords(&self, it: usize, ilat: usize, ilon: usize) -> TrackPoint {
        let secs = self.times[it];
        TrackPoint {
            time: DateTime::from_timestamp(secs.floor() as i64, ((secs - secs.floor()) * 1e9) as u32)
                .unwrap_or_default(),
            lat: self.lats[ilat],
            lon: self.lons[ilon],
        }
    }

    /// Applies `f` to every node value, keeping the axes.
    pub fn map_values(&self, variable: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            variable: variable.into(),
            times: self.times.clone(),
            lats: self.lats.clone(),
            lons: self.lons.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Trilinear interpolation at one point (bilinear in space, linear in time).
    pub fn value_at(&self, point: &TrackPoint, index: usize) -> Result<f64> {
        let (t0, t1, wt) = locate(&self.times, epoch_seconds(&point.time), index, "time")?;
        let (y0, y1, wy) = locate(&self.lats, point.lat, index, "latitude")?;
        let (x0, x1, wx) = locate(&self.lons, point.lon, index, "longitude")?;
        let mut acc = 0.0;
        for (it, a) in [(t0, 1.0 - wt), (t1, wt)] {
            for (iy, b) in [(y0, 1.0 - wy), (y1, wy)] {
                for (ix, c) in [(x0, 1.0 - wx), (x1, wx)] {
                    let w = a * b * c;
                    if w != 0.0 {
                        acc += w * self.node(it, iy, ix);
                    }
                }
            }
        }
        Ok(acc)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "lat", "lon", "value"])?;
        for it in 0..self.times.len() {
            for iy in 0..self.lats.len() {
                for ix in 0..self.lons.len() {
                    let p = self.node_coords(it, iy, ix);
                    w.write_record([
                        format_timestamp(&p.time),
                        p.lat.to_string(),
                        p.lon.to_string(),
                        self.node(it, iy, ix).to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<hindcast csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(variable: &str, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let bad = |what: &str| Error::Validation(format!("hindcast `{variable}` row {}: bad {what}", n + 1));
            let t = parse_timestamp(field(0)).ok_or_else(|| bad("time"))?;
            let lat: f64 = field(1).parse().map_err(|_| bad("lat"))?;
            let lon: f64 = field(2).parse().map_err(|_| bad("lon"))?;
            let v: f64 = field(3).parse().map_err(|_| bad("value"))?;
            rows.push((t, lat, lon, v));
        }
        Self::from_quadruples(variable, &rows)
    }
}

/// Finds the bracketing nodes of `x` and the weight of the upper node. Points
/// up to one cell beyond either end are clamped to the boundary node.
fn locate(axis: &[f64], x: f64, index: usize, name: &str) -> Result<(usize, usize, f64)> {
    let n = axis.len();
    if n == 1 {
        return Ok((0, 0, 0.0));
    }
    let out = |detail: String| Error::OutOfBounds { index, detail };
    if !x.is_finite() {
        return Err(out(format!("{name} is not finite")));
    }
    if x < axis[0] {
        return if axis[0] - x <= axis[1] - axis[0] {
            Ok((0, 1, 0.0))
        } else {
            Err(out(format!("{name} {x} below grid start {}", axis[0])))
        };
    }
    if x > axis[n - 1] {
        return if x - axis[n - 1] <= axis[n - 1] - axis[n - 2] {
            Ok((n - 2, n - 1, 1.0))
        } else {
            Err(out(format!("{name} {x} beyond grid end {}", axis[n - 1])))
        };
    }
    let i = axis.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let w = (x - axis[i]) / (axis[i + 1] - axis[i]);
    Ok((i, i + 1, w))
}

pub fn interpolate_hindcast(grid: &HindcastGrid, track: &[TrackPoint]) -> Result<Vec<f64>> {
    track.iter().enumerate().map(|(i, p)| grid.value_at(p, i)).collect()
}

/// Names of the hindcast variables consumed by [`merge_hindcast`].
pub const HINDCAST_VARIABLES: [&str; 7] = [
    "wind_u",
    "wind_v",
    "current_u",
    "current_v",
    "wave_height",
    "wave_dir",
    "wave_period",
];

/// Earth-frame hindcast fields. Wind and current are eastward/northward
/// velocity components in m/s; `wave_dir` is the direction waves come from,
/// degrees clockwise from north.
#[derive(Debug, Clone)]
pub struct HindcastSet {
    grids: BTreeMap<String, HindcastGrid>,
}

impl HindcastSet {
    pub fn new(grids: Vec<HindcastGrid>) -> Result<Self> {
        let mut map: BTreeMap<String, HindcastGrid> = grids.into_iter().map(|g| (g.variable.clone(), g)).collect();
        for name in HINDCAST_VARIABLES {
            if !map.contains_key(name) {
                return Err(Error::Schema(format!("hindcast variable {name}")));
            }
        }
        // Direction is interpolated through its unit-vector components.
        let dir = map["wave_dir"].clone();
        map.insert("wave_dir_sin".into(), dir.map_values("wave_dir_sin", |d| d.to_radians().sin()));
        map.insert("wave_dir_cos".into(), dir.map_values("wave_dir_cos", |d| d.to_radians().cos()));
        Ok(Self { grids: map })
    }

    /// Loads `<variable>.csv` for every required variable from a directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut grids = Vec::new();
        for name in HINDCAST_VARIABLES {
            let path = dir.join(format!("{name}.csv"));
            let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            grids.push(HindcastGrid::read_csv(name, file)?);
        }
        Self::new(grids)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for name in HINDCAST_VARIABLES {
            let path = dir.join(format!("{name}.csv"));
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            self.grids[name].write_csv(std::io::BufWriter::new(file))?;
        }
        Ok(())
    }

    pub fn grid(&self, name: &str) -> Option<&HindcastGrid> {
        self.grids.get(name)
    }

    /// Earth-frame conditions at one track point.
    pub fn conditions_at(&self, point: &TrackPoint, index: usize) -> Result<EarthConditions> {
        let v = |name: &str| self.grids[name].value_at(point, index);
        let s = v("wave_dir_sin")?;
        let c = v("wave_dir_cos")?;
        Ok(EarthConditions {
            wind_u: v("wind_u")?,
            wind_v: v("wind_v")?,
            current_u: v("current_u")?,
            current_v: v("current_v")?,
            wave_height: v("wave_height")?.max(0.0),
            wave_dir: s.atan2(c).to_degrees().rem_euclid(360.0),
            wave_period: v("wave_period")?.max(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthConditions {
    pub wind_u: f64,
    pub wind_v: f64,
    pub current_u: f64,
    pub current_v: f64,
    pub wave_height: f64,
    pub wave_dir: f64,
    pub wave_period: f64,
}

/// Ship-frame environment values as stored in [`VoyageSample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShipFrameConditions {
    pub long_wind: f64,
    pub trans_wind: f64,
    pub long_current: f64,
    pub wave_height: f64,
    pub rel_wave_dir: f64,
    pub wave_period: f64,
}

impl EarthConditions {
    pub fn to_ship_frame(&self, heading_deg: f64) -> ShipFrameConditions {
        let (s, c) = heading_deg.to_radians().sin_cos();
        let along_wind = self.wind_u * s + self.wind_v * c;
        ShipFrameConditions {
            long_wind: -along_wind,
            trans_wind: self.wind_u * c - self.wind_v * s,
            long_current: self.current_u * s + self.current_v * c,
            wave_height: self.wave_height,
            rel_wave_dir: relative_direction(self.wave_dir, heading_deg),
            wave_period: self.wave_period,
        }
    }
}

/// `(from_dir - heading)` wrapped into [0, 360).
pub fn relative_direction(from_dir: f64, heading: f64) -> f64 {
    let r = (from_dir - heading).rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Apparent wind (speed m/s, direction off the bow in degrees, 0 = from ahead)
/// seen by an anemometer on a ship moving at `gps_speed_knots`.
pub fn apparent_wind(long_wind: f64, trans_wind: f64, gps_speed_knots: f64) -> (f64, f64) {
    let head = long_wind + gps_speed_knots * KNOT;
    let from_starboard = -trans_wind;
    (head.hypot(trans_wind), relative_direction(from_starboard.atan2(head).to_degrees(), 0.0))
}

/// Replaces the environment fields of each sample with hindcast values
/// interpolated along the track and rotated into the ship frame.
pub fn merge_hindcast(samples: &mut [VoyageSample], set: &HindcastSet) -> Result<()> {
    for (i, s) in samples.iter_mut().enumerate() {
        let p = TrackPoint {
            time: s.timestamp,
            lat: s.latitude,
            lon: s.longitude,
        };
        let env = set.conditions_at(&p, i)?.to_ship_frame(s.heading);
        s.long_wind_speed = env.long_wind;
        s.trans_wind_speed = env.trans_wind;
        s.long_current_speed = env.long_current;
        s.sig_wave_height = env.wave_height;
        s.rel_mean_wave_dir = env.rel_wave_dir;
        s.mean_wave_period = env.wave_period;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(h: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(h * 3600, 0).unwrap()
    }

    fn grid_with(values: impl Fn(usize, usize, usize) -> f64) -> HindcastGrid {
        let times = vec![t(0), t(1), t(2)];
        let lats = vec![50.0, 50.5, 51.0];
        let lons = vec![0.0, 0.5, 1.0, 1.5];
        let mut v = Vec::new();
        for it in 0..3 {
            for iy in 0..3 {
                for ix in 0..4 {
                    v.push(values(it, iy, ix));
                }
            }
        }
        HindcastGrid::new("x", times, lats, lons, v).unwrap()
    }

    #[test]
    fn exact_node_returns_stored_value() {
        let g = grid_with(|a, b, c| (a * 100 + b * 10 + c) as f64 * 0.37);
        for it in 0..3 {
            for iy in 0..3 {
                for ix in 0..4 {
                    let p = g.node_coords(it, iy, ix);
                    assert_eq!(g.value_at(&p, 0).unwrap(), g.node(it, iy, ix));
                }
            }
        }
    }

    #[test]
    fn time_midpoint_is_linear() {
        let g = grid_with(|it, _, _| if it == 0 { 2.0 } else { 4.0 });
        let p = TrackPoint {
            time: DateTime::from_timestamp(1800, 0).unwrap(),
            lat: 50.5,
            lon: 0.5,
        };
        assert_eq!(g.value_at(&p, 0).unwrap(), 3.0);
    }

    #[test]
    fn random_points_match_brute_force_corner_sum() {
        let g = grid_with(|a, b, c| ((a * 7 + b * 3 + c) as f64).sin() * 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let secs: f64 = rng.random_range(0.0..7200.0);
            let lat: f64 = rng.random_range(50.0..51.0);
            let lon: f64 = rng.random_range(0.0..1.5);
            let p = TrackPoint {
                time: DateTime::from_timestamp(secs.floor() as i64, ((secs - secs.floor()) * 1e9) as u32).unwrap(),
                lat,
                lon,
            };
            let secs = epoch_seconds(&p.time);
            // Independent oracle: explicit cell search and 8-corner weighted sum.
            let it = (secs / 3600.0).floor() as usize;
            let iy = ((lat - 50.0) / 0.5).floor() as usize;
            let ix = (lon / 0.5).floor() as usize;
            let ft = secs / 3600.0 - it as f64;
            let fy = (lat - 50.0) / 0.5 - iy as f64;
            let fx = lon / 0.5 - ix as f64;
            let mut expect = 0.0;
            for dt in 0..2 {
                for dy in 0..2 {
                    for dx in 0..2 {
                        let w = (if dt == 1 { ft } else { 1.0 - ft })
                            * (if dy == 1 { fy } else { 1.0 - fy })
                            * (if dx == 1 { fx } else { 1.0 - fx });
                        expect += w * g.node(it + dt, iy + dy, ix + dx);
                    }
                }
            }
            let got = g.value_at(&p, 0).unwrap();
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn far_outside_is_out_of_bounds_with_index() {
        let g = grid_with(|_, _, _| 1.0);
        let track = vec![
            TrackPoint { time: t(1), lat: 50.2, lon: 0.2 },
            TrackPoint { time: t(1), lat: 53.0, lon: 0.2 },
        ];
        match interpolate_hindcast(&g, &track) {
            Err(Error::OutOfBounds { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        // within one cell of the edge: clamped
        let near = [TrackPoint { time: t(1), lat: 51.3, lon: 0.2 }];
        assert!(interpolate_hindcast(&g, &near).is_ok());
    }

    #[test]
    fn duplicate_quadruple_is_rejected() {
        let rows = vec![(t(0), 50.0, 0.0, 1.0), (t(0), 50.0, 0.0, 2.0)];
        assert!(HindcastGrid::from_quadruples("x", &rows).is_err());
    }

    #[test]
    fn frame_conversion_signs() {
        // Northbound ship, wind blowing towards south (from north) = head wind.
        let e = EarthConditions {
            wind_u: 0.0,
            wind_v: -10.0,
            current_u: 0.0,
            current_v: 1.0,
            wave_height: 2.0,
            wave_dir: 0.0,
            wave_period: 7.0,
        };
        let s = e.to_ship_frame(0.0);
        assert!((s.long_wind - 10.0).abs() < 1e-12);
        assert!(s.trans_wind.abs() < 1e-12);
        assert!((s.long_current - 1.0).abs() < 1e-12);
        assert_eq!(s.rel_wave_dir, 0.0);
        // Eastbound: the same wind is now on the port beam, blowing towards starboard.
        let s = e.to_ship_frame(90.0);
        assert!(s.long_wind.abs() < 1e-9);
        assert!((s.trans_wind - 10.0).abs() < 1e-9);
        assert!((s.rel_wave_dir - 270.0).abs() < 1e-9);
    }

    #[test]
    fn apparent_wind_of_still_air_is_head_wind() {
        let (speed, dir) = apparent_wind(0.0, 0.0, 10.0);
        assert!((speed - 10.0 * KNOT).abs() < 1e-12);
        assert_eq!(dir, 0.0);
    }

    proptest::proptest! {
        #[test]
        fn interpolation_bounded_by_cell_corners(
            secs in 0.0f64..7200.0, lat in 50.0f64..51.0, lon in 0.0f64..1.5, seed in 0u64..1000
        ) {
            let g = grid_with(|a, b, c| (((a * 31 + b * 17 + c * 7) as u64 ^ seed) % 97) as f64);
            let p = TrackPoint {
                time: DateTime::from_timestamp(secs.floor() as i64, 0).unwrap(),
                lat, lon,
            };
            let v = g.value_at(&p, 0).unwrap();
            let (t0, t1, _) = locate(&g.times, epoch_seconds(&p.time), 0, "t").unwrap();
            let (y0, y1, _) = locate(&g.lats, lat, 0, "y").unwrap();
            let (x0, x1, _) = locate(&g.lons, lon, 0, "x").unwrap();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for it in [t0, t1] { for iy in [y0, y1] { for ix in [x0, x1] {
                lo = lo.min(g.node(it, iy, ix));
                hi = hi.max(g.node(it, iy, ix));
            }}}
            proptest::prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }
}
