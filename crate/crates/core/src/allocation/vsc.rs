use serde::{Deserialize, Serialize};

use crate::allocation::WheelCommand;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral state (anti-windup).
    pub integral_limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VscConfig {
    #[serde(rename = "yaw_rate_error_threshold_rad_s")]
    pub yaw_rate_threshold: f64,
    #[serde(rename = "sideslip_threshold_rad")]
    pub sideslip_threshold: f64,
    #[serde(rename = "relaxed_yaw_rate_error_threshold_rad_s")]
    pub relaxed_yaw_rate_threshold: f64,
    #[serde(rename = "relaxed_sideslip_threshold_rad")]
    pub relaxed_sideslip_threshold: f64,
    /// Fraction of a threshold by which an active intervention must drop
    /// before it is released.
    pub hysteresis: f64,
    pub relaxed: bool,
    /// Braking-slip magnitude the ABS regulates to.
    pub abs_slip_target: f64,
    pub abs_slip_band: f64,
    pub relaxed_abs_slip_band: f64,
    pub abs_gains: PidGains,
    /// Horizon over which the slip rate is extrapolated to engage the ABS
    /// early; zero engages on the measured slip only.
    #[serde(default, rename = "abs_lookahead_s")]
    pub abs_lookahead: f64,
    /// Corrective brake torque per unit yaw-rate error.
    #[serde(rename = "brake_gain_nm_s_per_rad")]
    pub brake_gain: f64,
    #[serde(rename = "brake_torque_max_nm")]
    pub brake_torque_max: f64,
    /// Reference yaw rate is capped at this fraction of `mu g / vx`.
    pub yaw_reference_friction_fraction: f64,
}

impl VscConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.yaw_rate_threshold > 0.0
            && self.sideslip_threshold > 0.0
            && self.relaxed_yaw_rate_threshold >= self.yaw_rate_threshold
            && self.relaxed_sideslip_threshold >= self.sideslip_threshold
            && (0.0..1.0).contains(&self.hysteresis)
            && self.abs_slip_target > 0.0
            && self.abs_slip_band >= 0.0
            && self.relaxed_abs_slip_band >= self.abs_slip_band
            && self.abs_gains.integral_limit >= 0.0
            && self.abs_lookahead >= 0.0
            && self.brake_torque_max >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "vsc thresholds must be positive, relaxed >= nominal, hysteresis in [0, 1)".into(),
            ))
        }
    }

    /// Active `(yaw-rate error, sideslip)` thresholds.
    pub fn thresholds(&self) -> (f64, f64) {
        if self.relaxed {
            (self.relaxed_yaw_rate_threshold, self.relaxed_sideslip_threshold)
        } else {
            (self.yaw_rate_threshold, self.sideslip_threshold)
        }
    }

    pub fn abs_band(&self) -> f64 {
        if self.relaxed {
            self.relaxed_abs_slip_band
        } else {
            self.abs_slip_band
        }
    }
}

/// Steady-state kinematic yaw rate of the commanded steering, capped by
/// the friction-limited value.
pub fn yaw_rate_reference(
    vx: f64,
    delta_f: f64,
    delta_r: f64,
    wheelbase: f64,
    mu: f64,
    g: f64,
    fraction: f64,
) -> f64 {
    let kin = vx * (delta_f - delta_r) / wheelbase;
    let cap = fraction * mu * g / vx.abs().max(1.0);
    kin.clamp(-cap, cap)
}

/// Wheel-slip PID. Engages once the braking slip leaves the band above the
/// target and stays engaged until its output returns to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AbsPid {
    pub active: bool,
    integral: f64,
    prev_error: Option<f64>,
    prev_slip: Option<f64>,
}

impl AbsPid {
    /// Brake torque reduction (>= 0) for wheel slip ratio `slip`.
    pub fn update(&mut self, slip: f64, target: f64, band: f64, gains: &PidGains, dt: f64) -> f64 {
        self.update_with_lookahead(slip, target, band, 0.0, gains, dt)
    }

    /// As [`Self::update`], but the regulated slip is extrapolated
    /// `lookahead` seconds ahead at its current rate (phase lead against the
    /// brake actuator lag).
    pub fn update_with_lookahead(
        &mut self,
        slip: f64,
        target: f64,
        band: f64,
        lookahead: f64,
        gains: &PidGains,
        dt: f64,
    ) -> f64 {
        assert!(dt > 0.0, "dt must be positive");
        let rate = self.prev_slip.map_or(0.0, |p| (slip - p) / dt);
        self.prev_slip = Some(slip);
        let e = -(slip + lookahead * rate) - target;
        if !self.active {
            if e <= band {
                return 0.0;
            }
            self.active = true;
            self.integral = 0.0;
            self.prev_error = None;
        }
        self.integral = (self.integral + e * dt).clamp(-gains.integral_limit, gains.integral_limit);
        let d = self.prev_error.map_or(0.0, |p| (e - p) / dt);
        self.prev_error = Some(e);
        let out = gains.kp * e + gains.ki * self.integral + gains.kd * d;
        if out <= 0.0 && e < 0.0 {
            *self = Self {
                prev_slip: self.prev_slip,
                ..Self::default()
            };
            return 0.0;
        }
        out.max(0.0)
    }
}

pub fn abs_pid(state: &mut AbsPid, slip: f64, target: f64, band: f64, gains: &PidGains, dt: f64) -> f64 {
    state.update(slip, target, band, gains, dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VscTrigger {
    YawRate,
    Sideslip,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VscDecision {
    pub intervene: bool,
    pub trigger: Option<VscTrigger>,
    /// Wheel receiving the corrective brake torque.
    pub wheel: Option<usize>,
    pub brake_torque: f64,
}

/// Threshold rule with hysteresis. The corrective moment opposes the
/// yaw-rate error (or, for a sideslip trigger alone, the yaw rate); it is
/// applied at the front wheel when it slows the rotation and at the rear
/// wheel when it adds to it, on the side matching its sign.
pub fn vsc_supervise(
    yaw_rate: f64,
    yaw_rate_ref: f64,
    beta: f64,
    config: &VscConfig,
    was_active: bool,
) -> VscDecision {
    let (yr_th, b_th) = config.thresholds();
    let k = if was_active { 1.0 - config.hysteresis } else { 1.0 };
    let err = yaw_rate_ref - yaw_rate;
    let trigger = if err.abs() > k * yr_th {
        Some(VscTrigger::YawRate)
    } else if beta.abs() > k * b_th {
        Some(VscTrigger::Sideslip)
    } else {
        None
    };
    let Some(trigger) = trigger else {
        return VscDecision::default();
    };
    let moment_sign = match trigger {
        VscTrigger::YawRate => err.signum(),
        VscTrigger::Sideslip if yaw_rate != 0.0 => -yaw_rate.signum(),
        VscTrigger::Sideslip => beta.signum(),
    };
    let opposes_rotation = moment_sign * yaw_rate < 0.0;
    let left = moment_sign > 0.0;
    let wheel = match (opposes_rotation, left) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    };
    VscDecision {
        intervene: true,
        trigger: Some(trigger),
        wheel: Some(wheel),
        brake_torque: (config.brake_gain * err.abs()).min(config.brake_torque_max),
    }
}

/// Supervisor state for one simulation.
#[derive(Clone, Debug)]
pub struct Vsc {
    pub config: VscConfig,
    pub active: bool,
    pub abs: [AbsPid; 4],
}

impl Vsc {
    pub fn new(config: VscConfig) -> Self {
        Self {
            config,
            active: false,
            abs: [AbsPid::default(); 4],
        }
    }

    /// Stability override on a wheel command. Returns the decision and
    /// which wheels had their brake torque reduced by the ABS.
    pub fn apply(
        &mut self,
        cmd: &WheelCommand,
        yaw_rate: f64,
        yaw_rate_ref: f64,
        beta: f64,
        slip: &[f64; 4],
        dt: f64,
    ) -> (WheelCommand, VscDecision, [bool; 4]) {
        let mut out = *cmd;
        let decision = vsc_supervise(yaw_rate, yaw_rate_ref, beta, &self.config, self.active);
        self.active = decision.intervene;
        if let Some(w) = decision.wheel {
            out.brake_torque[w] += decision.brake_torque;
            out.drive_torque[w / 2] = 0.0;
        }
        let band = self.config.abs_band();
        let mut abs_on = [false; 4];
        for i in 0..4 {
            let corr = self.abs[i].update_with_lookahead(
                slip[i],
                self.config.abs_slip_target,
                band,
                self.config.abs_lookahead,
                &self.config.abs_gains,
                dt,
            );
            if corr > 0.0 {
                abs_on[i] = out.brake_torque[i] > 0.0;
                out.brake_torque[i] = (out.brake_torque[i] - corr).max(0.0);
            }
        }
        (out, decision, abs_on)
    }
}
