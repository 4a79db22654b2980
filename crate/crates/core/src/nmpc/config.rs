use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variant::Variant;

/// One weight per tracked output. Entries a variant does not carry are ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputWeights {
    pub vx: f64,
    pub e_y: f64,
    pub e_psi: f64,
    pub delta_f: f64,
    pub delta_r: f64,
    pub fx_f: f64,
    pub mz: f64,
}

impl OutputWeights {
    /// Weights in the variant's output order.
    pub fn for_variant(&self, variant: Variant) -> Vec<f64> {
        match variant {
            Variant::Bas => vec![self.vx, self.e_y, self.e_psi, self.delta_f, self.fx_f],
            Variant::Mz => vec![
                self.vx, self.e_y, self.e_psi, self.delta_f, self.fx_f, self.mz,
            ],
            Variant::MzDr => vec![
                self.vx,
                self.e_y,
                self.e_psi,
                self.delta_f,
                self.delta_r,
                self.fx_f,
                self.mz,
            ],
        }
    }

    fn all(&self) -> [f64; 7] {
        [
            self.vx,
            self.e_y,
            self.e_psi,
            self.delta_f,
            self.delta_r,
            self.fx_f,
            self.mz,
        ]
    }
}

/// Small quadratic penalties on the rate inputs (and on the braking split's
/// distance from nominal) that keep the Gauss-Newton Hessian definite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputWeights {
    pub ddelta_f: f64,
    pub dfx_f: f64,
    pub p_b: f64,
    pub dmz: f64,
    pub ddelta_r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcpBounds {
    #[serde(rename = "delta_f_max_rad")]
    pub delta_f_max: f64,
    #[serde(rename = "delta_r_max_rad")]
    pub delta_r_max: f64,
    #[serde(rename = "ddelta_f_max_rad_s")]
    pub ddelta_f_max: f64,
    #[serde(rename = "ddelta_r_max_rad_s")]
    pub ddelta_r_max: f64,
    #[serde(rename = "dfx_f_min_n_s")]
    pub dfx_f_min: f64,
    #[serde(rename = "dfx_f_max_n_s")]
    pub dfx_f_max: f64,
    #[serde(rename = "dmz_min_nm_s")]
    pub dmz_min: f64,
    #[serde(rename = "dmz_max_nm_s")]
    pub dmz_max: f64,
    pub p_b_min: f64,
    pub p_b_max: f64,
}

/// Settings of the interior-point QP subsolver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpSettings {
    pub max_iter: usize,
    /// Residual and complementarity tolerance, relative to the data scale.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcpConfig {
    /// Prediction horizon in stages.
    pub horizon: usize,
    #[serde(rename = "stage_duration_s")]
    pub ts: f64,
    pub stage_weights: OutputWeights,
    pub terminal_weights: OutputWeights,
    pub input_weights: InputWeights,
    pub bounds: OcpBounds,
    /// Ideal friction factor over the actual one (>= 1).
    pub mu_id_factor: f64,
    /// Penalty on the axle friction inequalities, applied to the squared
    /// violation normalised by the axle friction budget.
    pub friction_penalty: f64,
    /// Normalised friction violation counted as acceptable in reports.
    pub friction_residual_ceiling: f64,
    /// Linear and quadratic penalty on the yaw-moment slack.
    pub slack_linear: f64,
    pub slack_quadratic: f64,
    /// Magnitude used to scale the slack decision variable.
    #[serde(rename = "slack_scale_nm")]
    pub slack_scale: f64,
    pub sqp_max_iter: usize,
    pub tolerance: f64,
    pub qp: QpSettings,
}

impl OcpConfig {
    pub fn mu_id(&self, mu: f64) -> f64 {
        self.mu_id_factor * mu
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("ocp: {m}")));
        if self.horizon < 2 {
            return bad("horizon must be >= 2");
        }
        if !(self.ts > 0.0) {
            return bad("stage_duration_s must be > 0");
        }
        if self
            .stage_weights
            .all()
            .iter()
            .chain(self.terminal_weights.all().iter())
            .any(|w| !(*w >= 0.0))
        {
            return bad("weights must be >= 0");
        }
        let iw = &self.input_weights;
        if [iw.ddelta_f, iw.dfx_f, iw.p_b, iw.dmz, iw.ddelta_r]
            .iter()
            .any(|w| !(*w >= 0.0))
        {
            return bad("input weights must be >= 0");
        }
        if !(self.mu_id_factor >= 1.0) {
            return bad("mu_id_factor must be >= 1 (mu_id may not underestimate mu)");
        }
        let b = &self.bounds;
        if !(b.delta_f_max > 0.0 && b.delta_r_max >= 0.0 && b.ddelta_f_max > 0.0 && b.ddelta_r_max >= 0.0)
        {
            return bad("steering bounds must be positive");
        }
        if !(b.dfx_f_min < b.dfx_f_max && b.dmz_min <= b.dmz_max) {
            return bad("rate bounds must satisfy min < max");
        }
        if !(0.0 < b.p_b_min && b.p_b_min <= b.p_b_max && b.p_b_max < 1.0) {
            return bad("braking split bounds must satisfy 0 < p_b_min <= p_b_max < 1");
        }
        if !(self.slack_linear >= 0.0 && self.slack_quadratic > 0.0 && self.slack_scale > 0.0) {
            return bad("slack penalties must be >= 0 (quadratic > 0)");
        }
        if !(self.friction_penalty >= 0.0) {
            return bad("friction_penalty must be >= 0");
        }
        if self.sqp_max_iter == 0 || !(self.tolerance > 0.0) {
            return bad("sqp_max_iter must be >= 1 and tolerance > 0");
        }
        if self.qp.max_iter == 0 || !(self.qp.tolerance > 0.0) {
            return bad("qp.max_iter must be >= 1 and qp.tolerance > 0");
        }
        Ok(())
    }
}
