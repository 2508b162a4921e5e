use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ann::Mlp;
use crate::mvr::{PcrModel, PlsrModel};
use crate::preprocessing::{column_indices, select_columns, Scaling};
use crate::{Error, Result};

/// Which speed target converts a model's output into a speed axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedPathway {
    Gps,
    Log,
    GpsCubed,
    LogCubed,
}

impl SpeedPathway {
    pub const ALL: [SpeedPathway; 4] = [
        SpeedPathway::Gps,
        SpeedPathway::Log,
        SpeedPathway::GpsCubed,
        SpeedPathway::LogCubed,
    ];

    pub fn target_name(self) -> &'static str {
        match self {
            SpeedPathway::Gps => "gps_speed",
            SpeedPathway::Log => "log_speed",
            SpeedPathway::GpsCubed => "gps_speed_cubed",
            SpeedPathway::LogCubed => "log_speed_cubed",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpeedPathway::Gps => "gps",
            SpeedPathway::Log => "log",
            SpeedPathway::GpsCubed => "gps_cubed",
            SpeedPathway::LogCubed => "log_cubed",
        }
    }

    pub fn is_cubed(self) -> bool {
        matches!(self, SpeedPathway::GpsCubed | SpeedPathway::LogCubed)
    }

    /// Speed in knots from the predicted target value. Negative cubes clamp
    /// to zero and report `true`.
    pub fn to_speed(self, value: f64) -> (f64, bool) {
        if !self.is_cubed() {
            return (value, false);
        }
        if value < 0.0 {
            (0.0, true)
        } else {
            (value.cbrt(), false)
        }
    }
}

impl std::str::FromStr for SpeedPathway {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpeedPathway::ALL
            .into_iter()
            .find(|p| p.label() == s || p.target_name() == s)
            .ok_or_else(|| Error::Config(format!("unknown speed pathway `{s}`")))
    }
}

pub const POWER_TARGET: &str = "shaft_power";

/// Any of the calibrated regression models, tagged by family in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CalibratedModel {
    Pcr(PcrModel),
    Plsr(PlsrModel),
    Ann(Mlp),
}

impl CalibratedModel {
    pub fn family(&self) -> &'static str {
        match self {
            CalibratedModel::Pcr(_) => "pcr",
            CalibratedModel::Plsr(_) => "plsr",
            CalibratedModel::Ann(_) => "ann",
        }
    }

    pub fn version(&self) -> u32 {
        match self {
            CalibratedModel::Pcr(m) => m.version,
            CalibratedModel::Plsr(m) => m.version,
            CalibratedModel::Ann(m) => m.version,
        }
    }

    pub fn scaling(&self) -> &Scaling {
        match self {
            CalibratedModel::Pcr(m) => &m.scaling,
            CalibratedModel::Plsr(m) => &m.scaling,
            CalibratedModel::Ann(m) => &m.scaling,
        }
    }

    pub fn input_names(&self) -> &[String] {
        &self.scaling().x.names
    }

    pub fn target_names(&self) -> &[String] {
        &self.scaling().y.names
    }

    pub fn target_index(&self, name: &str) -> Result<usize> {
        self.target_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("{} model has no `{name}` target", self.family())))
    }

    /// Speed pathways available from this model's targets, in canonical order.
    pub fn pathways(&self) -> Vec<SpeedPathway> {
        SpeedPathway::ALL
            .into_iter()
            .filter(|p| self.target_names().iter().any(|n| n == p.target_name()))
            .collect()
    }

    /// One pathway per speed variable for reporting: the cubed target where
    /// the model has it, so linear-model curves come out cubic.
    pub fn report_pathways(&self) -> Vec<SpeedPathway> {
        let offered = self.pathways();
        [
            (SpeedPathway::GpsCubed, SpeedPathway::Gps),
            (SpeedPathway::LogCubed, SpeedPathway::Log),
        ]
        .into_iter()
        .filter_map(|(cubed, plain)| {
            [cubed, plain].into_iter().find(|p| offered.contains(p))
        })
        .collect()
    }

    /// Picks this model's input columns, by name, out of a wider raw matrix.
    pub fn select_inputs(&self, names: &[String], x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if names.len() != x.ncols() {
            return Err(Error::shape(format!("{} columns", names.len()), x.ncols().to_string()));
        }
        let cols = column_indices(names, self.input_names())
            .map_err(|e| Error::Schema(format!("{} model inputs do not match the features: {e}", self.family())))?;
        Ok(select_columns(x, &cols))
    }

    /// Raw-unit predictions from raw inputs named by `names`. The MLP is
    /// evaluated without masks.
    pub fn predict(&self, names: &[String], x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let x = self.select_inputs(names, x)?;
        match self {
            CalibratedModel::Pcr(m) => Ok(m.predict(&x)),
            CalibratedModel::Plsr(m) => Ok(m.predict(&x)),
            CalibratedModel::Ann(m) => m.predict(&x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubed_pathway_clamps_negative() {
        assert_eq!(SpeedPathway::GpsCubed.to_speed(27.0), (3.0, false));
        assert_eq!(SpeedPathway::LogCubed.to_speed(-8.0), (0.0, true));
        assert_eq!(SpeedPathway::Gps.to_speed(-1.0), (-1.0, false));
    }

    #[test]
    fn report_pathways_prefer_cubed_targets() {
        use crate::ann::{mlp_init, DropoutPrior};
        use crate::preprocessing::{Scaling, Standardizer, LINEAR_INPUTS, LINEAR_TARGETS};
        let linear = super::super::fixtures::exact_linear(0.0, 1.0);
        assert_eq!(linear.report_pathways(), [SpeedPathway::GpsCubed, SpeedPathway::LogCubed]);
        let mut mlp = mlp_init(&[10, 4, 3], 1, DropoutPrior::default(), 100).unwrap();
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        mlp.scaling = Scaling {
            x: Standardizer::identity(names(&LINEAR_INPUTS)),
            y: Standardizer::identity(names(&LINEAR_TARGETS)),
        };
        assert_eq!(CalibratedModel::Ann(mlp).report_pathways(), [SpeedPathway::Gps, SpeedPathway::Log]);
    }

    #[test]
    fn pathway_parses_label_or_target() {
        assert_eq!("gps".parse::<SpeedPathway>().unwrap(), SpeedPathway::Gps);
        assert_eq!("log_speed_cubed".parse::<SpeedPathway>().unwrap(), SpeedPathway::LogCubed);
        assert!("rpm".parse::<SpeedPathway>().is_err());
    }
}
