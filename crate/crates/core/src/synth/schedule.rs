use chrono::{DateTime, Duration, DurationRound, Utc};
use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};

use super::scenario::SynthScenario;
use crate::data_model::CleaningEvent;
use crate::{Error, Result};

const NM_PER_DEG: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    Port {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
        position: (f64, f64),
    },
    Sail(Voyage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Voyage {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub from: (f64, f64),
    pub to: (f64, f64),
    /// degrees clockwise from north
    pub heading: f64,
    pub draft: f64,
    pub trim: f64,
    /// cruise speed of each equal-duration leg, knots
    pub legs: Vec<f64>,
}

impl Phase {
    pub fn start(&self) -> DateTime<Utc> {
        match self {
            Phase::Port { start, .. } => *start,
            Phase::Sail(v) => v.start,
        }
    }

    pub fn end(&self) -> DateTime<Utc> {
        match self {
            Phase::Port { end, .. } => *end,
            Phase::Sail(v) => v.end,
        }
    }
}

impl Voyage {
    fn fraction(&self, t: DateTime<Utc>) -> f64 {
        let total = (self.end - self.start).num_milliseconds() as f64;
        ((t - self.start).num_milliseconds() as f64 / total).clamp(0.0, 1.0)
    }

    pub fn position(&self, t: DateTime<Utc>) -> (f64, f64) {
        let f = self.fraction(t);
        (
            self.from.0 + f * (self.to.0 - self.from.0),
            self.from.1 + f * (self.to.1 - self.from.1),
        )
    }

    /// Commanded speed through water before wander: the leg's cruise speed
    /// ramped linearly up from and down to rest.
    pub fn speed(&self, t: DateTime<Utc>, ramp_hours: f64) -> f64 {
        let leg = ((self.fraction(t) * self.legs.len() as f64) as usize).min(self.legs.len() - 1);
        let cruise = self.legs[leg];
        if ramp_hours <= 0.0 {
            return cruise;
        }
        let since = (t - self.start).num_seconds() as f64 / 3600.0;
        let until = (self.end - t).num_seconds() as f64 / 3600.0;
        cruise * (since.min(until) / ramp_hours).clamp(0.0, 1.0)
    }
}

/// Flat-earth distance (nm) and initial bearing (deg) between two positions.
fn course(from: (f64, f64), to: (f64, f64)) -> (f64, f64) {
    let mid_lat = (0.5 * (from.0 + to.0)).to_radians();
    let north = (to.0 - from.0) * NM_PER_DEG;
    let east = (to.1 - from.1) * NM_PER_DEG * mid_lat.cos();
    (north.hypot(east), east.atan2(north).to_degrees().rem_euclid(360.0))
}

fn hours(h: f64) -> Duration {
    Duration::seconds((h * 3600.0).round() as i64)
}

/// Alternating port stays and voyages covering the scenario, with the
/// cleaning events moved into port stays.
pub fn build_schedule<R: Rng>(sc: &SynthScenario, rng: &mut R) -> Result<(Vec<Phase>, Vec<CleaningEvent>)> {
    let s = &sc.schedule;
    let [lat0, lat1, lon0, lon1] = s.region;
    let weights = WeightedIndex::new(s.cruise_speeds.iter().map(|p| p[1]))
        .map_err(|e| Error::Config(format!("cruise speed weights: {e}")))?;
    let trim = Normal::new(0.0, s.trim_std).map_err(|e| Error::Config(e.to_string()))?;
    let end = sc.end();
    let mut phases = Vec::new();
    let mut t = sc.start;
    let mut here = (rng.random_range(lat0..lat1), rng.random_range(lon0..lon1));
    while t < end {
        let stay = rng.random_range(s.port_days[0]..=s.port_days[1]);
        let leave = t + hours(stay * 24.0);
        phases.push(Phase::Port {
            start: t,
            end: leave,
            position: here,
        });
        t = leave;
        if t >= end {
            break;
        }
        let mut dest;
        let mut tries = 0;
        loop {
            dest = (rng.random_range(lat0..lat1), rng.random_range(lon0..lon1));
            tries += 1;
            if course(here, dest).0 >= s.min_voyage_nm || tries > 1000 {
                break;
            }
        }
        let (distance, heading) = course(here, dest);
        if distance < s.min_voyage_nm {
            return Err(Error::Config("region is too small for the minimum voyage distance".into()));
        }
        let mut legs: Vec<f64> = (0..s.legs_per_voyage).map(|_| s.cruise_speeds[weights.sample(rng)][0]).collect();
        let laden = rng.random_bool(s.laden_fraction);
        if laden {
            legs.iter_mut().for_each(|v| *v *= s.laden_speed_factor);
        }
        let mean_speed = legs.iter().sum::<f64>() / legs.len() as f64;
        let duration = distance / mean_speed + s.ramp_hours;
        let voyage = Voyage {
            start: t,
            end: t + hours(duration),
            from: here,
            to: dest,
            heading,
            draft: if laden { s.laden_draft } else { sc.ship.ballast_draft },
            trim: trim.sample(rng) + if laden { 0.0 } else { s.ballast_trim },
            legs,
        };
        t = voyage.end;
        here = dest;
        phases.push(Phase::Sail(voyage));
    }
    let events = place_events(sc, &phases)?;
    Ok((phases, events))
}

/// Each requested event goes to the middle of the port stay nearest its
/// requested time. Two events in one stay make the schedule infeasible.
fn place_events(sc: &SynthScenario, phases: &[Phase]) -> Result<Vec<CleaningEvent>> {
    let end = sc.end();
    let ports: Vec<(usize, DateTime<Utc>)> = phases
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(i, p)| match p {
            Phase::Port { start, end: stop, .. } if *stop <= end => Some((i, *start + (*stop - *start) / 2)),
            _ => None,
        })
        .collect();
    let mut used = Vec::new();
    let mut events = Vec::new();
    let mut specs = sc.events.clone();
    specs.sort_by(|a, b| a.day.total_cmp(&b.day));
    for spec in specs {
        let wanted = sc.start + hours(spec.day * 24.0);
        let Some(&(i, mid)) = ports.iter().min_by_key(|(_, mid)| (*mid - wanted).num_seconds().abs()) else {
            return Err(Error::Validation("infeasible schedule: no port stay to place a cleaning event in".into()));
        };
        if used.contains(&i) {
            return Err(Error::Validation(format!(
                "infeasible schedule: events near day {} share a port stay",
                spec.day
            )));
        }
        used.push(i);
        let timestamp = mid.duration_trunc(Duration::minutes(1)).unwrap_or(mid);
        events.push(CleaningEvent {
            timestamp,
            kind: spec.kind,
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phases_alternate_and_tile_time() {
        let sc = SynthScenario::default();
        let (phases, events) = build_schedule(&sc, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(phases[0], Phase::Port { .. }));
        for w in phases.windows(2) {
            assert_eq!(w[0].end(), w[1].start());
            assert_ne!(matches!(w[0], Phase::Port { .. }), matches!(w[1], Phase::Port { .. }));
        }
        assert!(phases.last().unwrap().end() >= sc.end());
        assert_eq!(events.len(), sc.events.len());
        for e in &events {
            assert!(phases
                .iter()
                .any(|p| matches!(p, Phase::Port { start, end, .. } if *start < e.timestamp && e.timestamp < *end)));
        }
    }

    #[test]
    fn crowded_events_are_infeasible() {
        let mut sc = SynthScenario::default();
        sc.events[1].day = sc.events[0].day + 0.01;
        let err = build_schedule(&sc, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert!(err.to_string().contains("infeasible"));
    }

    #[test]
    fn ramp_starts_and_ends_at_rest() {
        let v = Voyage {
            start: DateTime::from_timestamp(0, 0).unwrap(),
            end: DateTime::from_timestamp(100 * 3600, 0).unwrap(),
            from: (0.0, 0.0),
            to: (10.0, 0.0),
            heading: 0.0,
            draft: 7.0,
            trim: 0.0,
            legs: vec![12.0, 15.0],
        };
        assert_eq!(v.speed(v.start, 2.0), 0.0);
        assert_eq!(v.speed(v.start + hours(1.0), 2.0), 6.0);
        assert_eq!(v.speed(v.start + hours(20.0), 2.0), 12.0);
        assert_eq!(v.speed(v.start + hours(70.0), 2.0), 15.0);
        assert_eq!(v.speed(v.end, 2.0), 0.0);
        assert_eq!(v.position(v.start + hours(50.0)), (5.0, 0.0));
        assert!((course((0.0, 0.0), (0.0, 1.0)).1 - 90.0).abs() < 1e-12);
    }
}
