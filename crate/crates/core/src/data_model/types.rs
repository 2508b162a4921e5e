use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::linalg::interp_linear;
use crate::{Error, Result};

/// One 15-minute averaged record of navigation, propulsion and environment data.
///
/// Environmental fields are in the ship frame. Longitudinal wind is positive
/// when opposing (head wind); longitudinal current is positive when following,
/// so that `gps_speed - log_speed` equals the current. Relative wave direction
/// is 0 deg for head seas. Drafts are assumed to be corrected for the
/// squat/Venturi effect upstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoyageSample {
    pub timestamp: DateTime<Utc>,
    /// rev/min
    pub shaft_rpm: f64,
    /// kW
    pub shaft_power: f64,
    /// knots, over ground
    pub gps_speed: f64,
    /// knots, through water
    pub log_speed: f64,
    pub draft_fore: f64,
    pub draft_aft: f64,
    pub latitude: f64,
    pub longitude: f64,
    /// degrees clockwise from north
    pub heading: f64,
    /// tonnes; absent when not recorded (never defaulted to zero)
    pub cargo_weight: Option<f64>,
    /// m/s, positive = head wind
    pub long_wind_speed: f64,
    /// m/s, positive = from port side towards starboard
    pub trans_wind_speed: f64,
    /// m/s, positive = following current
    pub long_current_speed: f64,
    /// m
    pub sig_wave_height: f64,
    /// degrees in [0, 360), 0 = head seas
    pub rel_mean_wave_dir: f64,
    /// s
    pub mean_wave_period: f64,
    /// Onboard anemometer relative wind speed, m/s.
    pub rel_wind_speed: Option<f64>,
    /// Onboard anemometer relative wind direction, degrees off the bow.
    pub rel_wind_dir: Option<f64>,
}

impl VoyageSample {
    pub fn mean_draft(&self) -> f64 {
        0.5 * (self.draft_fore + self.draft_aft)
    }

    pub fn trim_by_aft(&self) -> f64 {
        self.draft_aft - self.draft_fore
    }

    /// Checks the per-sample invariants. Returns a description of the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        let finite = [
            ("shaft_rpm", self.shaft_rpm),
            ("shaft_power", self.shaft_power),
            ("gps_speed", self.gps_speed),
            ("log_speed", self.log_speed),
            ("draft_fore", self.draft_fore),
            ("draft_aft", self.draft_aft),
            ("latitude", self.latitude),
            ("longitude", self.longitude),
            ("heading", self.heading),
            ("long_wind_speed", self.long_wind_speed),
            ("trans_wind_speed", self.trans_wind_speed),
            ("long_current_speed", self.long_current_speed),
            ("sig_wave_height", self.sig_wave_height),
            ("rel_mean_wave_dir", self.rel_mean_wave_dir),
            ("mean_wave_period", self.mean_wave_period),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
        }
        let non_negative = [
            ("shaft_power", self.shaft_power),
            ("gps_speed", self.gps_speed),
            ("log_speed", self.log_speed),
            ("sig_wave_height", self.sig_wave_height),
            ("mean_wave_period", self.mean_wave_period),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(format!("{name} is negative ({v})"));
            }
        }
        if self.draft_fore <= 0.0 || self.draft_aft <= 0.0 {
            return Err("drafts must be positive".into());
        }
        if !(0.0..360.0).contains(&self.rel_mean_wave_dir) {
            return Err(format!("rel_mean_wave_dir {} outside [0, 360)", self.rel_mean_wave_dir));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Propeller,
    Hull,
    HullAndPropeller,
}

impl EventKind {
    pub fn cleans_hull(self) -> bool {
        matches!(self, EventKind::Hull | EventKind::HullAndPropeller)
    }

    pub fn cleans_propeller(self) -> bool {
        matches!(self, EventKind::Propeller | EventKind::HullAndPropeller)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Propeller => "Propeller",
            EventKind::Hull => "Hull",
            EventKind::HullAndPropeller => "HullAndPropeller",
        }
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "propeller" => Ok(EventKind::Propeller),
            "hull" => Ok(EventKind::Hull),
            "hullandpropeller" | "hull_and_propeller" | "hull+propeller" => Ok(EventKind::HullAndPropeller),
            other => Err(Error::Validation(format!("unknown cleaning event kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningEvent {
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
}

/// Piecewise-linear lookup table over a single monotone axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Lookup1d {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Lookup1d {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("lookup table is empty".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("lookup table must be strictly increasing in its axis".into()));
        }
        let (xs, ys) = points.into_iter().unzip();
        Ok(Self { xs, ys })
    }

    /// Interpolated value and extrapolation flag.
    pub fn lookup(&self, x: f64) -> (f64, bool) {
        interp_linear(&self.xs, &self.ys, x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.lookup(x).0
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().cloned().zip(self.ys.iter().cloned())
    }
}

impl TryFrom<Vec<[f64; 2]>> for Lookup1d {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Lookup1d::new(v.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<Lookup1d> for Vec<[f64; 2]> {
    fn from(t: Lookup1d) -> Self {
        t.points().map(|(a, b)| [a, b]).collect()
    }
}

/// Wetted surface area on a (mean draft, trim) grid, interpolated bilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct WettedSurfaceTable {
    drafts: Vec<f64>,
    trims: Vec<f64>,
    /// `area[i * trims.len() + j]` at `(drafts[i], trims[j])`
    area: Vec<f64>,
}

impl WettedSurfaceTable {
    /// Builds the table from `(mean_draft, trim, area)` rows forming a complete grid.
    pub fn new(rows: &[(f64, f64, f64)]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("wetted surface table is empty".into()));
        }
        let mut drafts: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut trims: Vec<f64> = rows.iter().map(|r| r.1).collect();
        drafts.sort_by(f64::total_cmp);
        drafts.dedup();
        trims.sort_by(f64::total_cmp);
        trims.dedup();
        if drafts.len() * trims.len() != rows.len() {
            return Err(Error::Config(format!(
                "wetted surface table must be a full grid: {} drafts x {} trims but {} rows",
                drafts.len(),
                trims.len(),
                rows.len()
            )));
        }
        let mut area = vec![f64::NAN; rows.len()];
        for &(d, t, s) in rows {
            let i = drafts.iter().position(|&v| v == d).unwrap_or_default();
            let j = trims.iter().position(|&v| v == t).unwrap_or_default();
            let slot = &mut area[i * trims.len() + j];
            if !slot.is_nan() {
                return Err(Error::Config(format!("duplicate wetted surface entry at draft {d}, trim {t}")));
            }
            if s <= 0.0 {
                return Err(Error::Config("wetted surface must be positive".into()));
            }
            *slot = s;
        }
        let table = Self { drafts, trims, area };
        for j in 0..table.trims.len() {
            for i in 1..table.drafts.len() {
                if table.at(i, j) < table.at(i - 1, j) {
                    return Err(Error::Config("wetted surface must not decrease with draft".into()));
                }
            }
        }
        Ok(table)
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.area[i * self.trims.len() + j]
    }

    /// Area in m² and an extrapolation flag.
    pub fn lookup(&self, mean_draft: f64, trim: f64) -> (f64, bool) {
        let per_trim: Vec<f64> = (0..self.trims.len())
            .map(|j| {
                let col: Vec<f64> = (0..self.drafts.len()).map(|i| self.at(i, j)).collect();
                interp_linear(&self.drafts, &col, mean_draft).0
            })
            .collect();
        let draft_out = mean_draft < self.drafts[0] || mean_draft > self.drafts[self.drafts.len() - 1];
        let trim_out = trim < self.trims[0] || trim > self.trims[self.trims.len() - 1];
        let (s, _) = interp_linear(&self.trims, &per_trim, trim);
        (s, draft_out || trim_out)
    }
}

impl TryFrom<Vec<[f64; 3]>> for WettedSurfaceTable {
    type Error = Error;
    fn try_from(v: Vec<[f64; 3]>) -> Result<Self> {
        let rows: Vec<(f64, f64, f64)> = v.into_iter().map(|[a, b, c]| (a, b, c)).collect();
        WettedSurfaceTable::new(&rows)
    }
}

impl From<WettedSurfaceTable> for Vec<[f64; 3]> {
    fn from(t: WettedSurfaceTable) -> Self {
        let mut out = Vec::with_capacity(t.area.len());
        for (i, &d) in t.drafts.iter().enumerate() {
            for (j, &tr) in t.trims.iter().enumerate() {
                out.push([d, tr, t.at(i, j)]);
            }
        }
        out
    }
}

/// Total propulsive efficiency: a constant or a table against speed through water (knots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropulsiveEfficiency {
    Constant(f64),
    Table(Lookup1d),
}

impl PropulsiveEfficiency {
    pub fn at(&self, speed_knots: f64) -> Result<f64> {
        let eta = match self {
            PropulsiveEfficiency::Constant(v) => *v,
            PropulsiveEfficiency::Table(t) => t.value(speed_knots),
        };
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Config(format!("propulsive efficiency {eta} outside (0, 1]")));
        }
        Ok(eta)
    }
}

/// Coefficients of the default resistance estimators.
///
/// Calm water: `calm_coeff * Δ^(2/3) * V² * (1 + trim_coeff * trim²)` N, with Δ in
/// tonnes and V in m/s. Wind: `½ ρ_air C_x A_front (U|U| - V_gps|V_gps|)` N, where
/// `U = V_gps + long_wind` is the head component of the apparent wind; the
/// still-air part is left to the calm-water term.
/// Waves: `wave_coeff * Hs² * (1 + cos θ) / 2` N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceCoefficients {
    pub calm_coeff: f64,
    #[serde(default)]
    pub trim_coeff: f64,
    #[serde(default = "default_air_density")]
    pub air_density: f64,
    pub wind_drag_coeff: f64,
    pub frontal_area: f64,
    pub wave_coeff: f64,
}

fn default_air_density() -> f64 {
    1.225
}

/// Static description of the ship used by the physics-based parts of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipConfig {
    /// knots
    pub service_speed: f64,
    /// rev/min
    pub ncr_rpm: f64,
    /// knots
    pub design_speed: f64,
    /// m
    pub ballast_draft: f64,
    /// kg/m³
    #[serde(default = "default_water_density")]
    pub water_density: f64,
    pub wetted_surface: WettedSurfaceTable,
    pub propulsive_efficiency: PropulsiveEfficiency,
    /// mean draft (m) -> displacement (t)
    pub displacement: Lookup1d,
    pub resistance: ResistanceCoefficients,
}

fn default_water_density() -> f64 {
    1025.0
}

impl ShipConfig {
    pub fn validate(&self) -> Result<()> {
        if self.water_density <= 0.0 {
            return Err(Error::Config("water density must be positive".into()));
        }
        if self.service_speed <= 0.0 || self.design_speed <= 0.0 || self.ncr_rpm <= 0.0 {
            return Err(Error::Config("service speed, design speed and NCR rpm must be positive".into()));
        }
        if self.ballast_draft <= 0.0 {
            return Err(Error::Config("ballast draft must be positive".into()));
        }
        self.propulsive_efficiency.at(self.service_speed)?;
        let pts: Vec<(f64, f64)> = self.displacement.points().collect();
        if pts.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::Config("displacement must not decrease with draft".into()));
        }
        Ok(())
    }

    pub fn displacement_at(&self, mean_draft: f64) -> f64 {
        self.displacement.value(mean_draft)
    }

    pub fn wetted_surface_at(&self, mean_draft: f64, trim: f64) -> (f64, bool) {
        self.wetted_surface.lookup(mean_draft, trim)
    }
}
