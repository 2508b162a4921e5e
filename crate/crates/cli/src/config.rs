//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shipperf::data_model::VoyageSchema;
use shipperf::performance::CurveOptions;
use shipperf::synth::SynthScenario;
use shipperf::{Error, Result};

use crate::pipeline::{CalibrateParams, Family, PreprocessParams, ReportParams};

/// File locations. Relative paths resolve against the config file's
/// directory; inputs left unset default to the `synth` stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub events: Option<PathBuf>,
    /// directory of hindcast grids; the data must carry environment columns when absent
    pub hindcast: Option<PathBuf>,
    pub ship: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data: None,
            events: None,
            hindcast: None,
            ship: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub scenario: SynthScenario,
    /// rescale fouling so this event (0-based) removes `target_kw` at service speed
    pub calibrate_event: Option<usize>,
    pub target_kw: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            scenario: SynthScenario::default(),
            calibrate_event: None,
            target_kw: -300.0,
        }
    }
}

/// Where a standalone calm-water curve is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    /// `start`, `end` or an ISO-8601 instant inside the fouling series
    pub at: String,
    /// m; the ship's ballast draft when absent
    pub draft: Option<f64>,
    pub trim: f64,
    pub options: CurveOptions,
}

impl Default for CurveSection {
    fn default() -> Self {
        Self {
            at: "end".into(),
            draft: None,
            trim: 0.0,
            options: CurveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// drives every random choice: scenario, network initialisation and MC masks
    pub seed: u64,
    pub models: Vec<Family>,
    pub paths: Paths,
    pub schema: VoyageSchema,
    pub synth: SynthSection,
    pub preprocess: PreprocessParams,
    pub calibrate: CalibrateParams,
    pub report: ReportParams,
    pub curve: CurveSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            models: Family::ALL.to_vec(),
            paths: Paths::default(),
            schema: VoyageSchema::default(),
            synth: SynthSection::default(),
            preprocess: PreprocessParams::default(),
            calibrate: CalibrateParams::default(),
            report: ReportParams::default(),
            curve: CurveSection::default(),
        }
    }
}

/// Flags that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub models: Option<Vec<Family>>,
}

pub fn parse_models(list: &str) -> Result<Vec<Family>> {
    let mut models = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f: Family = part.parse()?;
        if !models.contains(&f) {
            models.push(f);
        }
    }
    if models.is_empty() {
        return Err(Error::Config("--models needs at least one of pcr, plsr, ann".into()));
    }
    Ok(models)
}

/// A loaded configuration with its paths resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    /// directory relative paths resolve against
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base, overrides)
    }

    pub fn from_str(text: &str, base: PathBuf, overrides: &Overrides) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(out) = &overrides.out {
            config.paths.out = out.clone();
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(models) = &overrides.models {
            config.models = models.clone();
        }
        if config.models.is_empty() {
            return Err(Error::Config("no models enabled".into()));
        }
        config.synth.scenario.seed = config.seed;
        config.calibrate.ann.seed = config.seed;
        config.report.settings.curve.mc_seed = config.seed;
        config.curve.options.mc_seed = config.seed;
        config.calibrate.models = config.models.clone();
        Ok(Self { config, base })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.out)
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.out_dir().join(stage)
    }

    fn input(&self, set: &Option<PathBuf>, synth_default: &str) -> PathBuf {
        match set {
            Some(p) => self.resolve(p),
            None => self.stage_dir("synth").join(synth_default),
        }
    }

    pub fn data_path(&self) -> PathBuf {
        self.input(&self.config.paths.data, "voyage.csv")
    }

    pub fn events_path(&self) -> PathBuf {
        self.input(&self.config.paths.events, "events.csv")
    }

    pub fn ship_path(&self) -> PathBuf {
        self.input(&self.config.paths.ship, "ship.json")
    }

    /// The hindcast directory, if one is configured or the synthetic one exists.
    pub fn hindcast_dir(&self) -> Option<PathBuf> {
        match &self.config.paths.hindcast {
            Some(p) => Some(self.resolve(p)),
            None if self.config.paths.data.is_none() => Some(self.stage_dir("synth").join("hindcast")).filter(|d| d.is_dir()),
            None => None,
        }
    }

    /// SHA-256 of the effective configuration. The output directory is left
    /// out so that reruns elsewhere stamp identical hashes.
    pub fn hash(&self) -> String {
        let mut c = self.config.clone();
        c.paths.out = PathBuf::new();
        let canonical = serde_json::to_vec(&c).expect("configuration serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
