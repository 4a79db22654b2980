//! Vehicle models: parameters, tyre forces, vertical loads, the single-track
//! prediction model and the two-track plant.

mod loads;
mod measure;
mod params;
pub mod plant;
pub mod prediction;
pub mod tyre;

pub use loads::{vertical_loads, wheel_loads, VerticalLoads};
pub use measure::{measure, sideslip, Measurement, NoiseConfig};
pub use params::{TyreParams, TyreSet, VehicleParams};
pub use plant::{plant_step, Plant, PlantConfig, PlantState, WheelForce};
pub use prediction::{
    AxleForces, ControlInput, PredictionConfig, PredictionModel, PredictionState, StageData,
};
pub use tyre::axle_lateral_force;
