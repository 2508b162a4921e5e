use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::SAMPLE_HOURS;
use crate::data_model::{leg_index, CleaningEvent, VoyageSample};
use crate::{Error, Result};

/// Per-sample fouling growth factors (static hours times growth rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoulingSeries {
    pub timestamps: Vec<DateTime<Utc>>,
    pub static_hours: Vec<f64>,
    pub hull: Vec<f64>,
    pub propeller: Vec<f64>,
    pub total: Vec<f64>,
    pub leg_rates: Vec<f64>,
}

/// Accumulates static time below `static_speed` knots into hull and
/// propeller growth factors. Each factor restarts from zero at the first
/// sample after an event that cleans it.
pub fn compute_fgf(
    samples: &[VoyageSample],
    events: &[CleaningEvent],
    leg_rates: &[f64],
    static_speed: f64,
) -> Result<FoulingSeries> {
    if leg_rates.len() != events.len() + 1 {
        return Err(Error::shape(
            format!("{} leg rates", events.len() + 1),
            leg_rates.len().to_string(),
        ));
    }
    let n = samples.len();
    let mut out = FoulingSeries {
        timestamps: Vec::with_capacity(n),
        static_hours: Vec::with_capacity(n),
        hull: Vec::with_capacity(n),
        propeller: Vec::with_capacity(n),
        total: Vec::with_capacity(n),
        leg_rates: leg_rates.to_vec(),
    };
    let (mut hull, mut prop, mut cumulative) = (0.0, 0.0, 0.0);
    let mut prev: Option<DateTime<Utc>> = None;
    for s in samples {
        let t = s.timestamp;
        let mut reset_hull = false;
        let mut reset_prop = false;
        for e in events.iter().filter(|e| prev.is_none_or(|p| e.timestamp > p) && e.timestamp <= t) {
            reset_hull |= e.kind.cleans_hull();
            reset_prop |= e.kind.cleans_propeller();
        }
        let dt = if s.gps_speed < static_speed { SAMPLE_HOURS } else { 0.0 };
        let rate = leg_rates[leg_index(events, t)];
        cumulative += dt;
        hull = if reset_hull { 0.0 } else { hull + dt * rate };
        prop = if reset_prop { 0.0 } else { prop + dt * rate };
        out.timestamps.push(t);
        out.static_hours.push(cumulative);
        out.hull.push(hull);
        out.propeller.push(prop);
        out.total.push(hull + prop);
        prev = Some(t);
    }
    Ok(out)
}

impl FoulingSeries {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["timestamp", "static_hours", "hull_fgf", "prop_fgf", "total_fgf"])?;
        for i in 0..self.timestamps.len() {
            w.write_record([
                crate::data_model::format_timestamp(&self.timestamps[i]),
                self.static_hours[i].to_string(),
                self.hull[i].to_string(),
                self.propeller[i].to_string(),
                self.total[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<fouling csv>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::EventKind;
    use crate::fouling::resistance::tests::sample;
    use chrono::Duration;

    fn series(speeds: &[f64]) -> Vec<VoyageSample> {
        speeds
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut s = sample();
                s.timestamp += Duration::minutes(15 * i as i64);
                s.gps_speed = *v;
                s
            })
            .collect()
    }

    #[test]
    fn never_static_means_no_fouling() {
        let f = compute_fgf(&series(&[12.0; 20]), &[], &[0.01], 3.0).unwrap();
        assert!(f.total.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hundred_static_hours() {
        let f = compute_fgf(&series(&[0.0; 400]), &[], &[0.01], 3.0).unwrap();
        let last = f.total.len() - 1;
        assert!((f.hull[last] - 1.0).abs() < 1e-12);
        assert!((f.propeller[last] - 1.0).abs() < 1e-12);
        assert_eq!(f.total[last], f.hull[last] + f.propeller[last]);
    }

    #[test]
    fn propeller_event_resets_only_propeller() {
        let s = series(&[0.0; 40]);
        let ev = CleaningEvent {
            timestamp: s[19].timestamp + Duration::minutes(5),
            kind: EventKind::Propeller,
        };
        let f = compute_fgf(&s, &[ev], &[0.02, 0.04], 3.0).unwrap();
        assert_eq!(f.propeller[20], 0.0);
        assert!(f.propeller[19] > 0.0);
        assert!((f.hull[20] - f.hull[19] - 0.25 * 0.04).abs() < 1e-15);
        assert!((f.propeller[21] - 0.25 * 0.04).abs() < 1e-15);
    }
}
