//! Single-track prediction model used inside the optimal control problem.
//!
//! Longitudinal/lateral force balances and yaw balance with front and rear
//! steering, a front axle longitudinal force with a braking split towards
//! the rear axle, and a direct yaw moment realised by differential braking
//! whose longitudinal side effect is the force `fx_mz`. Path-frame errors
//! follow the curvilinear (Frenet) kinematics about the reference path.

use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::variant::{sx, ux, Variant};
use crate::vehicle::tyre::axle_lateral_force;
use crate::vehicle::params::sign;
use crate::vehicle::{vertical_loads, TyreSet, VehicleParams, VerticalLoads};

/// OCP state; unused trailing entries are zero for the reduced variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionState {
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    pub s: f64,
    pub e_y: f64,
    pub e_psi: f64,
    pub delta_f: f64,
    pub fx_f: f64,
    pub mz: f64,
    pub delta_r: f64,
}

impl PredictionState {
    pub fn to_array(&self) -> [f64; sx::LEN] {
        [
            self.vx,
            self.vy,
            self.yaw_rate,
            self.s,
            self.e_y,
            self.e_psi,
            self.delta_f,
            self.fx_f,
            self.mz,
            self.delta_r,
        ]
    }

    pub fn from_array(a: &[f64; sx::LEN]) -> Self {
        Self {
            vx: a[sx::VX],
            vy: a[sx::VY],
            yaw_rate: a[sx::YAW_RATE],
            s: a[sx::S],
            e_y: a[sx::EY],
            e_psi: a[sx::EPSI],
            delta_f: a[sx::DELTA_F],
            fx_f: a[sx::FX_F],
            mz: a[sx::MZ],
            delta_r: a[sx::DELTA_R],
        }
    }

    /// The variant's state vector (10, 9 or 8 entries).
    pub fn to_vec(&self, variant: Variant) -> Vec<f64> {
        self.to_array()[..variant.nx()].to_vec()
    }

    pub fn from_slice(variant: Variant, v: &[f64]) -> Result<Self> {
        if v.len() != variant.nx() {
            return Err(Error::Dimension {
                expected: variant.nx(),
                got: v.len(),
            });
        }
        let mut a = [0.0; sx::LEN];
        a[..v.len()].copy_from_slice(v);
        Ok(Self::from_array(&a))
    }

    /// Zero the entries the variant does not carry.
    pub fn restricted(&self, variant: Variant) -> Self {
        let mut a = self.to_array();
        a[variant.nx()..].iter_mut().for_each(|x| *x = 0.0);
        Self::from_array(&a)
    }
}

/// OCP input; unused trailing entries are ignored by the reduced variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub ddelta_f: f64,
    pub dfx_f: f64,
    pub p_b: f64,
    pub dmz: f64,
    pub eps_mz: f64,
    pub ddelta_r: f64,
}

impl ControlInput {
    pub fn to_array(&self) -> [f64; ux::LEN] {
        [
            self.ddelta_f,
            self.dfx_f,
            self.p_b,
            self.dmz,
            self.eps_mz,
            self.ddelta_r,
        ]
    }

    pub fn from_array(a: &[f64; ux::LEN]) -> Self {
        Self {
            ddelta_f: a[ux::DDELTA_F],
            dfx_f: a[ux::DFX_F],
            p_b: a[ux::P_B],
            dmz: a[ux::DMZ],
            eps_mz: a[ux::EPS_MZ],
            ddelta_r: a[ux::DDELTA_R],
        }
    }

    pub fn to_vec(&self, variant: Variant) -> Vec<f64> {
        self.to_array()[..variant.nu()].to_vec()
    }

    pub fn from_slice(variant: Variant, v: &[f64]) -> Result<Self> {
        if v.len() != variant.nu() {
            return Err(Error::Dimension {
                expected: variant.nu(),
                got: v.len(),
            });
        }
        let mut a = [0.0; ux::LEN];
        a[..v.len()].copy_from_slice(v);
        Ok(Self::from_array(&a))
    }
}

/// Exogenous data for one prediction stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageData {
    pub ax_meas: f64,
    pub mu: f64,
    pub rho: f64,
}

/// Axle-level forces of the prediction model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxleForces<T> {
    pub fx_f: T,
    pub fx_r: T,
    pub fy_f: T,
    pub fy_r: T,
    /// Longitudinal force spent on the direct yaw moment (>= 0).
    pub fx_mz: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    /// Braking split used when the variant does not optimise it.
    pub p_b_nominal: f64,
    /// Front share of traction force (fixed).
    pub drive_split_front: f64,
    /// Slip-angle kinematics are refused below this speed.
    #[serde(rename = "speed_floor_m_s")]
    pub speed_floor: f64,
    /// Smoothing width of |Mz| in the yaw-moment braking force.
    #[serde(rename = "mz_abs_smoothing_nm")]
    pub mz_abs_smoothing: f64,
}

/// Single-track prediction model.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionModel {
    pub vehicle: VehicleParams,
    pub tyres: TyreSet,
    pub config: PredictionConfig,
    /// When set, lateral axle forces are held at these values `[front, rear]`
    /// instead of coming from the tyre model.
    pub frozen_lateral: Option<[f64; 2]>,
}

impl PredictionModel {
    pub fn new(vehicle: VehicleParams, tyres: TyreSet, config: PredictionConfig) -> Self {
        Self {
            vehicle,
            tyres,
            config,
            frozen_lateral: None,
        }
    }

    pub fn with_frozen_lateral(mut self, fy_f: f64, fy_r: f64) -> Self {
        self.frozen_lateral = Some([fy_f, fy_r]);
        self
    }

    pub fn loads(&self, w: &StageData) -> VerticalLoads {
        vertical_loads(w.ax_meas, &self.vehicle)
    }

    /// Front and rear axle slip angles.
    pub fn slip_angles(&self, state: &PredictionState) -> Result<(f64, f64)> {
        let x = state.to_array();
        self.slip_angles_generic(&x)
    }

    fn slip_angles_generic<T: Scalar>(&self, x: &[T; sx::LEN]) -> Result<(T, T)> {
        let vx = x[sx::VX];
        if !(vx.re() > self.config.speed_floor) {
            return Err(Error::SingularKinematics {
                vx: vx.re(),
                floor: self.config.speed_floor,
            });
        }
        let (vy, r) = (x[sx::VY], x[sx::YAW_RATE]);
        let p = &self.vehicle;
        let alpha_f = x[sx::DELTA_F] - ((vy + r * p.lf) / vx).atan();
        let alpha_r = x[sx::DELTA_R] - ((vy - r * p.lr) / vx).atan();
        Ok((alpha_f, alpha_r))
    }

    /// Rear axle longitudinal force implied by the front one: the braking
    /// split `p_b` when braking, the fixed traction split otherwise.
    pub fn rear_force<T: Scalar>(&self, fx_f: T, p_b: T) -> T {
        if fx_f.re() < 0.0 {
            fx_f * (T::cst(1.0) - p_b) / p_b
        } else {
            let d = self.config.drive_split_front;
            fx_f * ((1.0 - d) / d)
        }
    }

    /// Longitudinal force of the differential braking that realises `mz`.
    pub fn yaw_moment_force<T: Scalar>(&self, mz: T) -> T {
        let c = self.config.mz_abs_smoothing;
        ((mz * mz + c * c).sqrt() - c) / (0.5 * self.vehicle.track_width)
    }

    pub(crate) fn braking_split<T: Scalar>(&self, variant: Variant, u: &[T; ux::LEN]) -> T {
        if variant.has_yaw_moment() {
            u[ux::P_B]
        } else {
            T::cst(self.config.p_b_nominal)
        }
    }

    /// Axle forces at state `x` (full layout, variant-masked).
    pub fn axle_forces<T: Scalar>(
        &self,
        variant: Variant,
        x: &[T; sx::LEN],
        u: &[T; ux::LEN],
        w: &StageData,
    ) -> Result<AxleForces<T>> {
        let x = masked_state(variant, x);
        let (alpha_f, alpha_r) = self.slip_angles_generic(&x)?;
        let loads = self.loads(w);
        let (fy_f, fy_r) = match self.frozen_lateral {
            Some([f, r]) => (T::cst(f), T::cst(r)),
            None => (
                axle_lateral_force(alpha_f, loads.fz_f, w.mu, &self.tyres.front_lateral),
                axle_lateral_force(alpha_r, loads.fz_r, w.mu, &self.tyres.rear_lateral),
            ),
        };
        let fx_f = x[sx::FX_F];
        let fx_r = self.rear_force(fx_f, self.braking_split(variant, u));
        let fx_mz = if variant.has_yaw_moment() {
            self.yaw_moment_force(x[sx::MZ])
        } else {
            T::cst(0.0)
        };
        Ok(AxleForces {
            fx_f,
            fx_r,
            fy_f,
            fy_r,
            fx_mz,
        })
    }

    /// Continuous-time state derivative on the full layout; entries beyond
    /// the variant's dimension are zero.
    pub fn dynamics<T: Scalar>(
        &self,
        variant: Variant,
        x: &[T; sx::LEN],
        u: &[T; ux::LEN],
        w: &StageData,
    ) -> Result<[T; sx::LEN]> {
        let x = masked_state(variant, x);
        let f = self.axle_forces(variant, &x, u, w)?;
        let p = &self.vehicle;

        let (vx, vy, r) = (x[sx::VX], x[sx::VY], x[sx::YAW_RATE]);
        let (ey, epsi) = (x[sx::EY], x[sx::EPSI]);
        let (df, dr) = (x[sx::DELTA_F], x[sx::DELTA_R]);
        let (sf, cf, sr, cr) = (df.sin(), df.cos(), dr.sin(), dr.cos());

        let sgn = sign(vx.re());
        let resist = vx * vx * (p.cd_a * sgn) + p.f_roll * p.weight() * sgn;
        let fx_body = f.fx_f * cf - f.fy_f * sf + f.fx_r * cr - f.fy_r * sr - f.fx_mz - resist;
        let fy_front = f.fx_f * sf + f.fy_f * cf;
        let fy_rear = f.fx_r * sr + f.fy_r * cr;

        let mut dx = [T::cst(0.0); sx::LEN];
        dx[sx::VX] = fx_body / p.mass + vy * r;
        dx[sx::VY] = (fy_front + fy_rear) / p.mass - vx * r;
        let mut yaw = fy_front * p.lf - fy_rear * p.lr;
        if variant.has_yaw_moment() {
            yaw = yaw + x[sx::MZ];
        }
        dx[sx::YAW_RATE] = yaw / p.yaw_inertia;

        let denom = T::cst(1.0) - ey * w.rho;
        if !(denom.re() > 0.0) {
            return Err(Error::PathSingularity(denom.re()));
        }
        let sdot = (vx * epsi.cos() - vy * epsi.sin()) / denom;
        dx[sx::S] = sdot;
        dx[sx::EY] = vx * epsi.sin() + vy * epsi.cos();
        dx[sx::EPSI] = r - sdot * w.rho;

        dx[sx::DELTA_F] = u[ux::DDELTA_F];
        dx[sx::FX_F] = u[ux::DFX_F];
        if variant.has_yaw_moment() {
            dx[sx::MZ] = u[ux::DMZ];
        }
        if variant.has_rear_steer() {
            dx[sx::DELTA_R] = u[ux::DDELTA_R];
        }
        Ok(dx)
    }

    /// [`Self::dynamics`] on typed state/input.
    pub fn prediction_dynamics(
        &self,
        variant: Variant,
        x: &PredictionState,
        u: &ControlInput,
        w: &StageData,
    ) -> Result<PredictionState> {
        let dx = self.dynamics(variant, &x.to_array(), &u.to_array(), w)?;
        Ok(PredictionState::from_array(&dx))
    }
}

fn masked_state<T: Scalar>(variant: Variant, x: &[T; sx::LEN]) -> [T; sx::LEN] {
    let mut m = *x;
    m[variant.nx()..].iter_mut().for_each(|v| *v = T::cst(0.0));
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::vehicle::tyre::magic_formula;

    fn model() -> PredictionModel {
        Config::default().prediction_model()
    }

    fn still_air(mut m: PredictionModel) -> PredictionModel {
        m.vehicle.cd_a = 0.0;
        m.vehicle.f_roll = 0.0;
        m
    }

    const W0: StageData = StageData {
        ax_meas: 0.0,
        mu: 0.6,
        rho: 0.0,
    };

    #[test]
    fn pure_front_steer_slip() {
        let m = model();
        let x = PredictionState {
            vx: 10.0,
            delta_f: 0.1,
            ..Default::default()
        };
        let (af, ar) = m.slip_angles(&x).unwrap();
        assert!((af - 0.1).abs() < 1e-15);
        assert_eq!(ar, 0.0);
    }

    #[test]
    fn lateral_velocity_gives_negative_slip() {
        let m = model();
        let x = PredictionState {
            vx: 10.0,
            vy: 0.5,
            ..Default::default()
        };
        let (af, ar) = m.slip_angles(&x).unwrap();
        assert!(af < 0.0 && ar < 0.0);
    }

    #[test]
    fn slip_angle_hand_value() {
        let mut m = model();
        m.vehicle.lf = 1.0;
        let x = PredictionState {
            vx: 10.0,
            vy: 1.0,
            yaw_rate: 0.5,
            delta_f: 0.05,
            ..Default::default()
        };
        let (af, _) = m.slip_angles(&x).unwrap();
        assert!((af - (0.05 - 0.15f64.atan())).abs() < 1e-15);
    }

    #[test]
    fn slip_angles_refuse_low_speed() {
        let m = model();
        let x = PredictionState {
            vx: 0.2,
            ..Default::default()
        };
        assert!(matches!(
            m.slip_angles(&x),
            Err(Error::SingularKinematics { .. })
        ));
    }

    #[test]
    fn straight_coasting_is_equilibrium() {
        let m = still_air(model());
        let x = PredictionState {
            vx: 10.0,
            ..Default::default()
        };
        let u = ControlInput {
            p_b: 0.6,
            ..Default::default()
        };
        for v in Variant::ALL {
            let dx = m.prediction_dynamics(v, &x, &u, &W0).unwrap().to_array();
            for (i, d) in dx.iter().enumerate() {
                if i == sx::S {
                    assert!((d - 10.0).abs() < 1e-12);
                } else {
                    assert!(d.abs() < 1e-12, "{v}: component {i} = {d}");
                }
            }
        }
    }

    #[test]
    fn pure_yaw_moment() {
        let mut m = still_air(model());
        m.vehicle.yaw_inertia = 1000.0;
        let x = PredictionState {
            vx: 10.0,
            mz: 500.0,
            ..Default::default()
        };
        let u = ControlInput {
            p_b: 0.6,
            ..Default::default()
        };
        let dx = m.prediction_dynamics(Variant::Mz, &x, &u, &W0).unwrap();
        assert!((dx.yaw_rate - 0.5).abs() < 1e-12);
        // Not carried by the basic controller.
        let dx = m.prediction_dynamics(Variant::Bas, &x, &u, &W0).unwrap();
        assert_eq!(dx.yaw_rate, 0.0);
    }

    #[test]
    fn yaw_acceleration_linear_in_moment() {
        let m = still_air(model()).with_frozen_lateral(0.0, 0.0);
        let u = ControlInput {
            p_b: 0.6,
            ..Default::default()
        };
        let yaw_acc = |mz: f64| {
            let x = PredictionState {
                vx: 8.0,
                vy: 0.3,
                yaw_rate: 0.2,
                mz,
                ..Default::default()
            };
            m.prediction_dynamics(Variant::MzDr, &x, &u, &W0)
                .unwrap()
                .yaw_rate
        };
        for mz in [-1500.0, -10.0, 40.0, 2200.0] {
            let slope = (yaw_acc(mz) - yaw_acc(0.0)) / mz;
            assert!((slope - 1.0 / m.vehicle.yaw_inertia).abs() < 1e-12);
        }
    }

    #[test]
    fn path_singularity() {
        let m = model();
        let x = PredictionState {
            vx: 10.0,
            e_y: 2.0,
            ..Default::default()
        };
        let w = StageData { rho: 0.5, ..W0 };
        assert!(matches!(
            m.prediction_dynamics(Variant::Bas, &x, &ControlInput::default(), &w),
            Err(Error::PathSingularity(_))
        ));
    }

    #[test]
    fn yaw_moment_force_is_zero_at_zero() {
        let m = model();
        assert_eq!(m.yaw_moment_force(0.0), 0.0);
        assert!(m.yaw_moment_force(-300.0) > 0.0);
    }

    /// Term-by-term re-evaluation written independently of `dynamics`.
    #[test]
    fn matches_duplicate_evaluation() {
        let m = model();
        let p = &m.vehicle;
        let t = &m.tyres;
        let x = PredictionState {
            vx: 11.3,
            vy: -0.8,
            yaw_rate: 0.45,
            s: 12.0,
            e_y: 0.7,
            e_psi: -0.12,
            delta_f: 0.08,
            fx_f: -1800.0,
            mz: 650.0,
            delta_r: -0.05,
        };
        let u = ControlInput {
            ddelta_f: 0.2,
            dfx_f: 900.0,
            p_b: 0.7,
            dmz: -400.0,
            eps_mz: 0.0,
            ddelta_r: 0.1,
        };
        let w = StageData {
            ax_meas: -3.0,
            mu: 0.6,
            rho: 0.04,
        };
        let dx = m.prediction_dynamics(Variant::MzDr, &x, &u, &w).unwrap();

        let l = p.lf + p.lr;
        let fzf = p.mass * p.g * p.lr / l - p.mass * w.ax_meas * p.cg_height / l;
        let fzr = p.mass * p.g - fzf;
        let af = x.delta_f - ((x.vy + p.lf * x.yaw_rate) / x.vx).atan();
        let ar = x.delta_r - ((x.vy - p.lr * x.yaw_rate) / x.vx).atan();
        let fyf = w.mu * fzf * magic_formula(af, &t.front_lateral);
        let fyr = w.mu * fzr * magic_formula(ar, &t.rear_lateral);
        let fxr = x.fx_f * (1.0 - u.p_b) / u.p_b;
        let c = m.config.mz_abs_smoothing;
        let fxmz = ((x.mz * x.mz + c * c).sqrt() - c) / (p.track_width / 2.0);
        let drag = p.cd_a * x.vx * x.vx;
        let roll = p.f_roll * p.mass * p.g;
        let (df, dr) = (x.delta_f, x.delta_r);
        let vxd = (x.fx_f * df.cos() - fyf * df.sin() + fxr * dr.cos() - fyr * dr.sin() - fxmz
            - drag
            - roll
            + p.mass * x.vy * x.yaw_rate)
            / p.mass;
        let vyd = (x.fx_f * df.sin() + fyf * df.cos() + fxr * dr.sin() + fyr * dr.cos()
            - p.mass * x.vx * x.yaw_rate)
            / p.mass;
        let rd = (x.fx_f * df.sin() * p.lf + fyf * df.cos() * p.lf
            - fyr * dr.cos() * p.lr
            - fxr * dr.sin() * p.lr
            + x.mz)
            / p.yaw_inertia;
        let sd = (x.vx * x.e_psi.cos() - x.vy * x.e_psi.sin()) / (1.0 - w.rho * x.e_y);
        let eyd = x.vx * x.e_psi.sin() + x.vy * x.e_psi.cos();
        let epd = x.yaw_rate - w.rho * sd;

        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * (1.0 + b.abs());
        assert!(close(dx.vx, vxd));
        assert!(close(dx.vy, vyd));
        assert!(close(dx.yaw_rate, rd));
        assert!(close(dx.s, sd));
        assert!(close(dx.e_y, eyd));
        assert!(close(dx.e_psi, epd));
        assert_eq!(dx.delta_f, u.ddelta_f);
        assert_eq!(dx.fx_f, u.dfx_f);
        assert_eq!(dx.mz, u.dmz);
        assert_eq!(dx.delta_r, u.ddelta_r);
    }

    #[test]
    fn vector_lengths_follow_variant() {
        let x = PredictionState::default();
        assert_eq!(x.to_vec(Variant::MzDr).len(), 10);
        assert_eq!(x.to_vec(Variant::Mz).len(), 9);
        assert_eq!(x.to_vec(Variant::Bas).len(), 8);
        assert!(PredictionState::from_slice(Variant::Bas, &[0.0; 9]).is_err());
        assert_eq!(ControlInput::default().to_vec(Variant::Bas).len(), 2);
    }
}
