//! Two-track plant model.
//!
//! Planar rigid body with four wheels, each with its own vertical load
//! (longitudinal and lateral quasi-static load transfer), rotational
//! dynamics, and combined-slip magic-formula forces. Steering, brake and
//! drive actuators follow first-order lags. Integrated with fixed-step RK4.

use serde::{Deserialize, Serialize};

use crate::allocation::WheelCommand;
use crate::error::{Error, Result};
use crate::vehicle::params::sign;
use crate::vehicle::tyre::magic_formula;
use crate::vehicle::{vertical_loads, wheel_loads, TyreSet, VehicleParams};

/// Wheel order used throughout: front-left, front-right, rear-left, rear-right.
pub const WHEELS: [&str; 4] = ["fl", "fr", "rl", "rr"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Global position [m].
    pub x: f64,
    pub y: f64,
    /// Heading [rad].
    pub psi: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    /// Wheel rotational speeds [rad/s].
    pub omega: [f64; 4],
    pub delta_f: f64,
    pub delta_r: f64,
    pub brake_torque: [f64; 4],
    /// Front and rear axle machine torques [N m].
    pub drive_torque: [f64; 2],
    /// Body accelerations seen by the load transfer (lagged) [m/s^2].
    pub ax: f64,
    pub ay: f64,
}

impl PlantState {
    /// Vehicle rolling straight at `vx` with free wheels.
    pub fn rolling(x: f64, y: f64, psi: f64, vx: f64, wheel_radius: f64) -> Self {
        Self {
            x,
            y,
            psi,
            vx,
            omega: [vx / wheel_radius; 4],
            ..Default::default()
        }
    }

    fn axpy(&self, h: f64, d: &PlantState) -> PlantState {
        let mut o = *self;
        o.x += h * d.x;
        o.y += h * d.y;
        o.psi += h * d.psi;
        o.vx += h * d.vx;
        o.vy += h * d.vy;
        o.yaw_rate += h * d.yaw_rate;
        for i in 0..4 {
            o.omega[i] += h * d.omega[i];
            o.brake_torque[i] += h * d.brake_torque[i];
        }
        o.delta_f += h * d.delta_f;
        o.delta_r += h * d.delta_r;
        o.drive_torque[0] += h * d.drive_torque[0];
        o.drive_torque[1] += h * d.drive_torque[1];
        o.ax += h * d.ax;
        o.ay += h * d.ay;
        o
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    #[serde(rename = "steer_lag_s")]
    pub steer_lag: f64,
    #[serde(rename = "brake_lag_s")]
    pub brake_lag: f64,
    #[serde(rename = "drive_lag_s")]
    pub drive_lag: f64,
    /// Lag of the accelerations driving the load transfer.
    #[serde(rename = "load_lag_s")]
    pub load_lag: f64,
    pub lateral_load_transfer: bool,
    pub combined_slip: bool,
    #[serde(rename = "dt_s")]
    pub dt: f64,
    /// Denominator floor of the slip ratio.
    #[serde(rename = "slip_speed_floor_m_s")]
    pub slip_speed_floor: f64,
    /// Wheel speed below which brake torque fades linearly to zero.
    #[serde(rename = "brake_omega_eps_rad_s")]
    pub brake_omega_eps: f64,
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("steer_lag_s", self.steer_lag),
            ("brake_lag_s", self.brake_lag),
            ("drive_lag_s", self.drive_lag),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("plant.{k} must be >= 0")));
            }
        }
        for (k, v) in [
            ("load_lag_s", self.load_lag),
            ("dt_s", self.dt),
            ("slip_speed_floor_m_s", self.slip_speed_floor),
            ("brake_omega_eps_rad_s", self.brake_omega_eps),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("plant.{k} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Forces at one tyre contact.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WheelForce {
    pub fz: f64,
    pub slip_ratio: f64,
    pub slip_angle: f64,
    /// Wheel-frame longitudinal and lateral forces.
    pub fx: f64,
    pub fy: f64,
    /// Body-frame components.
    pub fx_body: f64,
    pub fy_body: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plant {
    pub vehicle: VehicleParams,
    pub tyres: TyreSet,
    pub config: PlantConfig,
    /// Actual tyre-road friction.
    pub mu: f64,
}

impl Plant {
    pub fn new(vehicle: VehicleParams, tyres: TyreSet, config: PlantConfig, mu: f64) -> Self {
        Self {
            vehicle,
            tyres,
            config,
            mu,
        }
    }

    /// Contact positions `(x, y)` in the body frame.
    pub fn wheel_positions(&self) -> [(f64, f64); 4] {
        let p = &self.vehicle;
        let h = 0.5 * p.track_width;
        [(p.lf, h), (p.lf, -h), (-p.lr, h), (-p.lr, -h)]
    }

    pub fn wheel_loads(&self, ps: &PlantState) -> [f64; 4] {
        if self.config.lateral_load_transfer {
            wheel_loads(ps.ax, ps.ay, &self.vehicle)
        } else {
            let a = vertical_loads(ps.ax, &self.vehicle);
            [0.5 * a.fz_f, 0.5 * a.fz_f, 0.5 * a.fz_r, 0.5 * a.fz_r]
        }
    }

    pub fn wheel_forces(&self, ps: &PlantState) -> [WheelForce; 4] {
        let fz = self.wheel_loads(ps);
        let pos = self.wheel_positions();
        let r = self.vehicle.wheel_radius;
        let mut out = [WheelForce::default(); 4];
        for i in 0..4 {
            let delta = if i < 2 { ps.delta_f } else { ps.delta_r };
            let (xi, yi) = pos[i];
            let vxi = ps.vx - ps.yaw_rate * yi;
            let vyi = ps.vy + ps.yaw_rate * xi;
            let (sd, cd) = delta.sin_cos();
            let v_long = vxi * cd + vyi * sd;
            let v_lat = -vxi * sd + vyi * cd;
            let alpha = -v_lat.atan2(v_long.abs());
            let kappa = (ps.omega[i] * r - v_long) / v_long.abs().max(self.config.slip_speed_floor);
            let lat = if i < 2 {
                &self.tyres.front_lateral
            } else {
                &self.tyres.rear_lateral
            };
            let cap = self.mu * fz[i];
            let fx = cap * magic_formula(kappa, &self.tyres.longitudinal);
            let mut fy = cap * magic_formula(alpha, lat);
            if self.config.combined_slip && cap > 0.0 {
                let q = fx / cap;
                fy *= (1.0 - q * q).max(0.0).sqrt();
            }
            out[i] = WheelForce {
                fz: fz[i],
                slip_ratio: kappa,
                slip_angle: alpha,
                fx,
                fy,
                fx_body: fx * cd - fy * sd,
                fy_body: fx * sd + fy * cd,
            };
        }
        out
    }

    /// Yaw moment of the body-frame longitudinal tyre forces (the part a
    /// left/right force imbalance produces).
    pub fn longitudinal_yaw_moment(&self, forces: &[WheelForce; 4]) -> f64 {
        self.wheel_positions()
            .iter()
            .zip(forces.iter())
            .map(|(&(_, y), f)| -y * f.fx_body)
            .sum()
    }

    fn derivative(&self, ps: &PlantState, cmd: &WheelCommand) -> PlantState {
        let p = &self.vehicle;
        let c = &self.config;
        let forces = self.wheel_forces(ps);
        let pos = self.wheel_positions();

        let mut fxb = 0.0;
        let mut fyb = 0.0;
        let mut mz = 0.0;
        let mut d = PlantState::default();
        for i in 0..4 {
            let f = &forces[i];
            let (xi, yi) = pos[i];
            fxb += f.fx_body;
            fyb += f.fy_body;
            mz += xi * f.fy_body - yi * f.fx_body;
            let drive = 0.5 * ps.drive_torque[i / 2];
            let brake = ps.brake_torque[i].max(0.0)
                * (ps.omega[i] / c.brake_omega_eps).clamp(-1.0, 1.0);
            d.omega[i] = (drive - brake - p.wheel_radius * f.fx) / p.wheel_inertia;
        }
        let resist = p.cd_a * ps.vx * ps.vx * sign(ps.vx) + p.f_roll * p.weight() * sign(ps.vx);
        let ax = (fxb - resist) / p.mass;
        let ay = fyb / p.mass;

        let (s, co) = ps.psi.sin_cos();
        d.x = ps.vx * co - ps.vy * s;
        d.y = ps.vx * s + ps.vy * co;
        d.psi = ps.yaw_rate;
        d.vx = ax + ps.vy * ps.yaw_rate;
        d.vy = ay - ps.vx * ps.yaw_rate;
        d.yaw_rate = mz / p.yaw_inertia;
        d.ax = (ax - ps.ax) / c.load_lag;
        d.ay = (ay - ps.ay) / c.load_lag;

        let lag = |target: f64, state: f64, tau: f64| {
            if tau > 0.0 {
                (target - state) / tau
            } else {
                0.0
            }
        };
        d.delta_f = lag(cmd.delta_f, ps.delta_f, c.steer_lag);
        d.delta_r = lag(cmd.delta_r, ps.delta_r, c.steer_lag);
        for i in 0..4 {
            d.brake_torque[i] = lag(cmd.brake_torque[i], ps.brake_torque[i], c.brake_lag);
        }
        for a in 0..2 {
            d.drive_torque[a] = lag(cmd.drive_torque[a], ps.drive_torque[a], c.drive_lag);
        }
        d
    }

    /// Advance by `dt` with one RK4 step, commands held constant.
    pub fn step(&self, ps: &PlantState, cmd: &WheelCommand, dt: f64) -> PlantState {
        let c = &self.config;
        // Lag-free actuators follow their command instantly.
        let mut s0 = *ps;
        if c.steer_lag == 0.0 {
            s0.delta_f = cmd.delta_f;
            s0.delta_r = cmd.delta_r;
        }
        if c.brake_lag == 0.0 {
            s0.brake_torque = cmd.brake_torque;
        }
        if c.drive_lag == 0.0 {
            s0.drive_torque = cmd.drive_torque;
        }
        let k1 = self.derivative(&s0, cmd);
        let k2 = self.derivative(&s0.axpy(0.5 * dt, &k1), cmd);
        let k3 = self.derivative(&s0.axpy(0.5 * dt, &k2), cmd);
        let k4 = self.derivative(&s0.axpy(dt, &k3), cmd);
        let mut next = s0.axpy(dt / 6.0, &k1);
        next = next.axpy(dt / 3.0, &k2);
        next = next.axpy(dt / 3.0, &k3);
        next.axpy(dt / 6.0, &k4)
    }

    /// Translational, yaw and wheel-spin kinetic energy.
    pub fn kinetic_energy(&self, ps: &PlantState) -> f64 {
        let p = &self.vehicle;
        0.5 * p.mass * (ps.vx * ps.vx + ps.vy * ps.vy)
            + 0.5 * p.yaw_inertia * ps.yaw_rate * ps.yaw_rate
            + ps.omega
                .iter()
                .map(|w| 0.5 * p.wheel_inertia * w * w)
                .sum::<f64>()
    }
}

/// [`Plant::step`] as a free function.
pub fn plant_step(plant: &Plant, ps: &PlantState, cmd: &WheelCommand, dt: f64) -> PlantState {
    plant.step(ps, cmd, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn plant() -> Plant {
        let c = Config::default();
        c.plant()
    }

    #[test]
    fn rest_is_equilibrium() {
        let p = plant();
        let s = PlantState::default();
        let n = p.step(&s, &WheelCommand::default(), 1e-3);
        assert_eq!(n, s);
    }

    #[test]
    fn pose_integrates_velocity_without_forces() {
        // Free rolling, no resistances: constant velocity, straight line.
        let mut p = plant();
        p.vehicle.cd_a = 0.0;
        p.vehicle.f_roll = 0.0;
        let psi = 0.7;
        let mut s = PlantState::rolling(1.0, -2.0, psi, 10.0, p.vehicle.wheel_radius);
        for _ in 0..1000 {
            s = p.step(&s, &WheelCommand::default(), 1e-3);
        }
        assert!((s.x - (1.0 + 10.0 * psi.cos())).abs() < 1e-9);
        assert!((s.y - (-2.0 + 10.0 * psi.sin())).abs() < 1e-9);
        assert!((s.vx - 10.0).abs() < 1e-12);
    }

    #[test]
    fn actuator_lag_reaches_63_percent() {
        let p = plant();
        let tau = p.config.steer_lag;
        let dt = tau / 200.0;
        let cmd = WheelCommand {
            delta_f: 0.1,
            ..Default::default()
        };
        let mut s = PlantState::default();
        for _ in 0..200 {
            s = p.step(&s, &cmd, dt);
        }
        let expected = 0.1 * (1.0 - (-1.0f64).exp());
        assert!((s.delta_f - expected).abs() < 1e-9, "{}", s.delta_f);
        assert!((s.delta_f / 0.1 - 0.632).abs() < 1e-3);
    }

    #[test]
    fn constant_drive_torque_acceleration() {
        // Quasi-steady: a = T / (r (m + 4 J / r^2)) with lags and resistances off.
        let mut p = plant();
        p.vehicle.cd_a = 0.0;
        p.vehicle.f_roll = 0.0;
        p.config.drive_lag = 0.0;
        let v = &p.vehicle;
        let torque = 400.0;
        let cmd = WheelCommand {
            drive_torque: [torque, torque],
            ..Default::default()
        };
        let mut s = PlantState::rolling(0.0, 0.0, 0.0, 10.0, v.wheel_radius);
        let dt = 1e-3;
        for _ in 0..500 {
            s = p.step(&s, &cmd, dt);
        }
        let v0 = s.vx;
        for _ in 0..100 {
            s = p.step(&s, &cmd, dt);
        }
        let a = (s.vx - v0) / 0.1;
        let r = v.wheel_radius;
        // Steady slip scales each wheel's spin-up by (1 + kappa).
        let k: f64 = p.wheel_forces(&s).iter().map(|f| 1.0 + f.slip_ratio).sum();
        let expected = 2.0 * torque / (r * (v.mass + k * v.wheel_inertia / (r * r)));
        assert!((a - expected).abs() / expected < 1e-3, "{a} vs {expected}");
        // First order: T/(r m) up to the wheel inertia share.
        assert!((expected - 2.0 * torque / (r * v.mass)).abs() / expected < 0.07);
    }

    #[test]
    fn coasting_never_gains_energy() {
        let p = plant();
        let mut s = PlantState::rolling(0.0, 0.0, 0.0, 14.0, p.vehicle.wheel_radius);
        s.vy = 0.8;
        s.yaw_rate = 0.3;
        let cmd = WheelCommand {
            delta_f: 0.15,
            delta_r: -0.05,
            ..Default::default()
        };
        let mut e = p.kinetic_energy(&s);
        for _ in 0..3000 {
            s = p.step(&s, &cmd, 1e-3);
            let e1 = p.kinetic_energy(&s);
            assert!(e1 <= e * (1.0 + 1e-12), "energy rose {e} -> {e1}");
            e = e1;
        }
    }

    #[test]
    fn locked_wheel_stays_near_zero_speed() {
        let p = plant();
        let mut s = PlantState::rolling(0.0, 0.0, 0.0, 12.0, p.vehicle.wheel_radius);
        let cmd = WheelCommand {
            brake_torque: [3000.0; 4],
            ..Default::default()
        };
        for _ in 0..800 {
            s = p.step(&s, &cmd, 1e-3);
            assert!(s.omega.iter().all(|w| w.is_finite()));
        }
        assert!(s.omega.iter().all(|&w| w.abs() < 2.0), "{:?}", s.omega);
        assert!(s.vx < 12.0);
    }
}
