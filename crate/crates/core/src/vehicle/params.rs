use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rigid-body, geometry and resistance parameters shared by the prediction
/// and plant models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    #[serde(rename = "yaw_inertia_kg_m2")]
    pub yaw_inertia: f64,
    /// CG to front axle.
    #[serde(rename = "lf_m")]
    pub lf: f64,
    /// CG to rear axle.
    #[serde(rename = "lr_m")]
    pub lr: f64,
    #[serde(rename = "track_width_m")]
    pub track_width: f64,
    #[serde(rename = "cg_height_m")]
    pub cg_height: f64,
    /// Lumped drag coefficient, F_drag = cd_a * vx^2.
    #[serde(rename = "drag_coeff_n_s2_per_m2")]
    pub cd_a: f64,
    #[serde(rename = "rolling_resistance_coeff")]
    pub f_roll: f64,
    #[serde(rename = "gravity_m_s2")]
    pub g: f64,
    #[serde(rename = "wheel_radius_m")]
    pub wheel_radius: f64,
    #[serde(rename = "wheel_inertia_kg_m2")]
    pub wheel_inertia: f64,
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.lf + self.lr
    }

    pub fn weight(&self) -> f64 {
        self.mass * self.g
    }

    /// Aerodynamic drag plus rolling resistance at longitudinal speed `vx`.
    pub fn resistance(&self, vx: f64) -> f64 {
        self.cd_a * vx * vx * sign(vx) + self.f_roll * self.weight() * sign(vx)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("mass_kg", self.mass),
            ("yaw_inertia_kg_m2", self.yaw_inertia),
            ("lf_m", self.lf),
            ("lr_m", self.lr),
            ("track_width_m", self.track_width),
            ("cg_height_m", self.cg_height),
            ("drag_coeff_n_s2_per_m2", self.cd_a),
            ("rolling_resistance_coeff", self.f_roll),
            ("gravity_m_s2", self.g),
            ("wheel_radius_m", self.wheel_radius),
            ("wheel_inertia_kg_m2", self.wheel_inertia),
        ];
        for (key, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("vehicle.{key} must be > 0, got {v}")));
            }
        }
        if self.cg_height >= self.wheelbase() {
            return Err(Error::Config(format!(
                "vehicle.cg_height_m ({}) must be below the wheelbase ({})",
                self.cg_height,
                self.wheelbase()
            )));
        }
        Ok(())
    }
}

/// `signum` with sign(0) = 0.
pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Magic-formula coefficients (stiffness, shape, peak, curvature).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TyreParams {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl TyreParams {
    /// The curve has a single peak when B, C, D > 0, 1 < C < 2 and E <= 1;
    /// C <= 1 gives a monotone curve which is also accepted.
    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.b > 0.0 && self.c > 0.0 && self.d > 0.0) {
            return Err(Error::Config(format!("{what}: B, C and D must be > 0")));
        }
        if self.c >= 2.0 || self.e > 1.0 {
            return Err(Error::Config(format!(
                "{what}: C < 2 and E <= 1 are required for a single-peaked curve"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TyreSet {
    pub front_lateral: TyreParams,
    pub rear_lateral: TyreParams,
    pub longitudinal: TyreParams,
}

impl TyreSet {
    pub fn validate(&self) -> Result<()> {
        self.front_lateral.validate("tyres.front_lateral")?;
        self.rear_lateral.validate("tyres.rear_lateral")?;
        self.longitudinal.validate("tyres.longitudinal")
    }
}
