//! The single JSON configuration document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocation::VscConfig;
use crate::error::{Error, Result};
use crate::nmpc::OcpConfig;
use crate::scenario::ScenarioConfig;
use crate::vehicle::{
    NoiseConfig, Plant, PlantConfig, PredictionConfig, PredictionModel, TyreSet, VehicleParams,
};

pub const CONFIG_SCHEMA: &str = "drift-nmpc/config/v1";

const DEFAULT_JSON: &str = include_str!("../config/default.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: String,
    pub vehicle: VehicleParams,
    pub tyres: TyreSet,
    pub prediction: PredictionConfig,
    pub plant: PlantConfig,
    pub ocp: OcpConfig,
    pub vsc: VscConfig,
    pub noise: NoiseConfig,
    pub scenario: ScenarioConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self::from_json(DEFAULT_JSON).expect("bundled default configuration is valid")
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<config>".into(),
            source: e,
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Config = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "schema `{}` is not supported (expected `{CONFIG_SCHEMA}`)",
                self.schema
            )));
        }
        self.vehicle.validate()?;
        self.tyres.validate()?;
        let p = &self.prediction;
        if !(0.0 < p.p_b_nominal && p.p_b_nominal < 1.0) {
            return Err(Error::Config("prediction.p_b_nominal must be in (0, 1)".into()));
        }
        if !(0.0 < p.drive_split_front && p.drive_split_front <= 1.0) {
            return Err(Error::Config("prediction.drive_split_front must be in (0, 1]".into()));
        }
        if !(p.speed_floor > 0.0 && p.mz_abs_smoothing > 0.0) {
            return Err(Error::Config(
                "prediction.speed_floor_m_s and mz_abs_smoothing_nm must be > 0".into(),
            ));
        }
        self.plant.validate()?;
        self.ocp.validate()?;
        self.vsc.validate()?;
        self.scenario.validate()?;
        if self.ocp.mu_id(self.scenario.mu) < self.scenario.mu {
            return Err(Error::Config("mu_id must not be below the plant mu".into()));
        }
        let ratio = self.ocp.ts / self.plant.dt;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 10.0 {
            return Err(Error::Config(
                "plant.dt_s must divide the stage duration at least 10 times".into(),
            ));
        }
        Ok(())
    }

    pub fn prediction_model(&self) -> PredictionModel {
        PredictionModel::new(self.vehicle.clone(), self.tyres, self.prediction.clone())
    }

    pub fn plant(&self) -> Plant {
        Plant::new(self.vehicle.clone(), self.tyres, self.plant.clone(), self.scenario.mu)
    }

    /// Copy with the rear steering limit replaced.
    pub fn with_delta_r_max_deg(&self, deg: f64) -> Self {
        let mut c = self.clone();
        c.ocp.bounds.delta_r_max = deg.to_radians();
        c
    }
}
