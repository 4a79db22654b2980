use serde::{Deserialize, Serialize};

use crate::nmpc::Solution;
use crate::variant::Variant;
use crate::vehicle::PredictionModel;

/// Torque-level command for the plant. Wheel order fl, fr, rl, rr.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WheelCommand {
    pub delta_f: f64,
    pub delta_r: f64,
    /// Friction brake torques, all >= 0.
    pub brake_torque: [f64; 4],
    /// Axle machine torques (front, rear), shared equally by the two wheels.
    pub drive_torque: [f64; 2],
}

impl WheelCommand {
    /// Commanded longitudinal force at each contact.
    pub fn wheel_forces(&self, wheel_radius: f64) -> [f64; 4] {
        std::array::from_fn(|i| {
            (0.5 * self.drive_torque[i / 2] - self.brake_torque[i]) / wheel_radius
        })
    }
}

/// Actuator targets from the first predicted stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub delta_f: f64,
    pub delta_r: f64,
    pub fx_f: f64,
    pub p_b: f64,
    pub mz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    pub command: WheelCommand,
    /// Longitudinal force realised at each wheel.
    pub wheel_forces: [f64; 4],
    /// Longitudinal loss of the differential braking.
    pub fx_mz: f64,
    /// At least one wheel demand was clipped to its friction budget.
    pub saturated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MzEnvelope {
    pub mz_min: f64,
    pub mz_max: f64,
}

const LEFT: [usize; 2] = [0, 2];
const RIGHT: [usize; 2] = [1, 3];

struct Base {
    forces: [f64; 4],
    /// Wheels allowed to take differential braking.
    eligible: [bool; 4],
}

/// Per-wheel forces before the yaw-moment share. In traction with a moment
/// demand the whole drive moves to the front machine so the rear wheels are
/// free to brake without fighting their own drive.
fn base_forces(fx_f: f64, fx_r: f64, with_moment: bool) -> Base {
    if fx_f > 0.0 && with_moment {
        let f = 0.5 * (fx_f + fx_r);
        Base {
            forces: [f, f, 0.0, 0.0],
            eligible: [false, false, true, true],
        }
    } else {
        Base {
            forces: [0.5 * fx_f, 0.5 * fx_f, 0.5 * fx_r, 0.5 * fx_r],
            eligible: [fx_f <= 0.0; 4],
        }
    }
}

/// Demand above the friction budget beyond round-off of the moment arm.
fn exceeds(demand: f64, cap: f64) -> bool {
    demand > cap * (1.0 + 1e-12) + 1e-9
}

fn residual(mu: f64, fz: f64, f: f64) -> f64 {
    (mu * fz.max(0.0) - f.abs()).max(0.0)
}

/// Map the actuator targets to wheel torques. A positive moment brakes the
/// left side. The extra braking force `|mz| / (tw/2)` is shared by the
/// eligible wheels of that side in proportion to their remaining friction
/// budget; braking splits front/rear by `p_b`.
pub fn allocate(
    cmd: &ActuatorCommand,
    loads: &[f64; 4],
    mu: f64,
    variant: Variant,
    model: &PredictionModel,
) -> Allocation {
    let p = &model.vehicle;
    let r = p.wheel_radius;
    let mz = if variant.has_yaw_moment() { cmd.mz } else { 0.0 };
    let p_b = if variant.has_yaw_moment() {
        cmd.p_b
    } else {
        model.config.p_b_nominal
    };
    let fx_r = model.rear_force(cmd.fx_f, p_b);
    let dfz = mz.abs() / (0.5 * p.track_width);
    let base = base_forces(cmd.fx_f, fx_r, dfz > 0.0);
    let mut f = base.forces;

    if dfz > 0.0 {
        let side = if mz > 0.0 { LEFT } else { RIGHT };
        let wheels: Vec<usize> = side.into_iter().filter(|&i| base.eligible[i]).collect();
        let caps: Vec<f64> = wheels.iter().map(|&i| residual(mu, loads[i], f[i])).collect();
        let total: f64 = caps.iter().sum();
        let weights: Vec<f64> = if total > 0.0 {
            caps.iter().map(|c| c / total).collect()
        } else {
            let lt: f64 = wheels.iter().map(|&i| loads[i].max(0.0)).sum();
            wheels
                .iter()
                .map(|&i| {
                    if lt > 0.0 {
                        loads[i].max(0.0) / lt
                    } else {
                        1.0 / wheels.len() as f64
                    }
                })
                .collect()
        };
        for (&i, w) in wheels.iter().zip(weights) {
            f[i] -= dfz * w;
        }
    }

    let mut saturated = false;
    let mut cmdw = WheelCommand {
        delta_f: cmd.delta_f,
        delta_r: if variant.has_rear_steer() {
            cmd.delta_r
        } else {
            0.0
        },
        ..Default::default()
    };
    for a in 0..2 {
        let (i, j) = (2 * a, 2 * a + 1);
        if f[i] > 0.0 || f[j] > 0.0 {
            // Driven axle: equal split, limited by the weaker wheel.
            let cap = mu * loads[i].max(0.0).min(loads[j].max(0.0));
            let each = 0.5 * (f[i] + f[j]);
            if exceeds(each, cap) {
                saturated = true;
            }
            cmdw.drive_torque[a] = 2.0 * each.min(cap) * r;
        } else {
            for k in [i, j] {
                let cap = mu * loads[k].max(0.0);
                if exceeds(-f[k], cap) {
                    saturated = true;
                }
                cmdw.brake_torque[k] = (-f[k]).min(cap) * r;
            }
        }
    }
    Allocation {
        command: cmdw,
        wheel_forces: cmdw.wheel_forces(r),
        fx_mz: dfz,
        saturated,
    }
}

/// Yaw moment realisable by one-side braking given the friction left after
/// the longitudinal forces predicted for the next stage.
pub fn mz_envelope(
    previous: Option<&Solution>,
    loads: &[f64; 4],
    mu: f64,
    model: &PredictionModel,
) -> MzEnvelope {
    let (fx_f, p_b) = match previous {
        Some(s) if s.states.len() > 1 && !s.inputs.is_empty() => {
            (s.states[1].fx_f, s.inputs[0].p_b)
        }
        _ => (0.0, model.config.p_b_nominal),
    };
    let fx_r = model.rear_force(fx_f, p_b);
    let base = base_forces(fx_f, fx_r, true);
    // Moving the drive to the front axle must itself fit, else no moment.
    if fx_f > 0.0 && (0..2).any(|i| base.forces[i] > mu * loads[i].max(0.0)) {
        return MzEnvelope {
            mz_min: 0.0,
            mz_max: 0.0,
        };
    }
    let side = |wheels: [usize; 2]| -> f64 {
        wheels
            .iter()
            .filter(|&&i| base.eligible[i])
            .map(|&i| residual(mu, loads[i], base.forces[i]))
            .sum()
    };
    let arm = 0.5 * model.vehicle.track_width;
    MzEnvelope {
        mz_min: -arm * side(RIGHT),
        mz_max: arm * side(LEFT),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::vehicle::wheel_loads;
    use proptest::prelude::*;

    fn model() -> PredictionModel {
        Config::default().prediction_model()
    }

    fn static_loads(m: &PredictionModel) -> [f64; 4] {
        wheel_loads(0.0, 0.0, &m.vehicle)
    }

    fn totals(a: &Allocation, tw: f64) -> (f64, f64) {
        let f = a.wheel_forces;
        let fx = f.iter().sum();
        let mz = 0.5 * tw * ((f[1] + f[3]) - (f[0] + f[2]));
        (fx, mz)
    }

    #[test]
    fn pure_drive_goes_to_the_machines() {
        let m = model();
        let cmd = ActuatorCommand {
            fx_f: 800.0,
            p_b: 0.6,
            ..Default::default()
        };
        let a = allocate(&cmd, &static_loads(&m), 0.6, Variant::Mz, &m);
        assert_eq!(a.command.brake_torque, [0.0; 4]);
        assert!((a.command.drive_torque[0] - 800.0 * m.vehicle.wheel_radius).abs() < 1e-9);
        let d = m.config.drive_split_front;
        let rear = 800.0 * (1.0 - d) / d * m.vehicle.wheel_radius;
        assert!((a.command.drive_torque[1] - rear).abs() < 1e-9);
        assert!(!a.saturated);
    }

    #[test]
    fn side_force_from_moment() {
        let mut m = model();
        m.vehicle.track_width = 1.4;
        let cmd = ActuatorCommand {
            fx_f: -300.0,
            p_b: 0.6,
            mz: 500.0,
            ..Default::default()
        };
        let a = allocate(&cmd, &static_loads(&m), 0.6, Variant::Mz, &m);
        assert!((a.fx_mz - 714.285_714_285_714_3).abs() < 1e-9);
        // Only the left side carries the extra braking.
        let r = m.vehicle.wheel_radius;
        let right = a.command.brake_torque[1] + a.command.brake_torque[3];
        let left = a.command.brake_torque[0] + a.command.brake_torque[2];
        assert!(((left - right) / r - 714.285_714_285_714_3).abs() < 1e-9);
    }

    #[test]
    fn braking_split_follows_p_b() {
        let m = model();
        let p_b = m.config.p_b_nominal.max(0.8);
        let cmd = ActuatorCommand {
            fx_f: -2000.0,
            p_b,
            ..Default::default()
        };
        let a = allocate(&cmd, &static_loads(&m), 1.0, Variant::MzDr, &m);
        let bt = a.command.brake_torque;
        let ratio = (bt[0] + bt[1]) / (bt[2] + bt[3]);
        assert!((ratio - p_b / (1.0 - p_b)).abs() < 1e-9);
    }

    #[test]
    fn basic_variant_ignores_moment_and_rear_steer() {
        let m = model();
        let cmd = ActuatorCommand {
            fx_f: -500.0,
            p_b: 0.9,
            mz: 800.0,
            delta_r: 0.1,
            delta_f: 0.05,
        };
        let a = allocate(&cmd, &static_loads(&m), 0.6, Variant::Bas, &m);
        assert_eq!(a.fx_mz, 0.0);
        assert_eq!(a.command.delta_r, 0.0);
        let bt = a.command.brake_torque;
        assert_eq!(bt[0], bt[1]);
        let p_b = m.config.p_b_nominal;
        assert!(((bt[0] + bt[1]) / (bt[2] + bt[3]) - p_b / (1.0 - p_b)).abs() < 1e-9);
    }

    #[test]
    fn saturation_is_flagged() {
        let m = model();
        let cmd = ActuatorCommand {
            fx_f: -20000.0,
            p_b: 0.6,
            ..Default::default()
        };
        let loads = static_loads(&m);
        let a = allocate(&cmd, &loads, 0.6, Variant::Mz, &m);
        assert!(a.saturated);
        for i in 0..4 {
            assert!(a.wheel_forces[i].abs() <= 0.6 * loads[i] + 1e-9);
        }
    }

    /// Independent per-wheel enumeration of the one-side braking moment.
    fn envelope_oracle(fx: [f64; 4], eligible: [bool; 4], loads: &[f64; 4], mu: f64, tw: f64) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for i in 0..4 {
            if !eligible[i] {
                continue;
            }
            let left = i % 2 == 0;
            let y = if left { 0.5 * tw } else { -0.5 * tw };
            let spare = f64::max(0.0, mu * loads[i] - fx[i].abs());
            // Braking force -spare at lateral offset y: moment -y * (-spare).
            let m = y * spare;
            if m > 0.0 {
                hi += m;
            } else {
                lo += m;
            }
        }
        (lo, hi)
    }

    #[test]
    fn envelope_without_prior_demand() {
        let m = model();
        let loads = static_loads(&m);
        let env = mz_envelope(None, &loads, 0.6, &m);
        let (lo, hi) = envelope_oracle([0.0; 4], [true; 4], &loads, 0.6, m.vehicle.track_width);
        assert!((env.mz_min - lo).abs() < 1e-9 && (env.mz_max - hi).abs() < 1e-9);
        assert!((env.mz_max + env.mz_min).abs() < 1e-9);
        let p = &m.vehicle;
        assert!((env.mz_max - 0.6 * p.mass * p.g * p.track_width / 4.0).abs() < 1e-6);
    }

    fn previous_with(fx_f: f64, p_b: f64) -> Solution {
        use crate::nmpc::SolverStatus;
        use crate::vehicle::{ControlInput, PredictionState};
        let x = PredictionState {
            vx: 10.0,
            fx_f,
            ..Default::default()
        };
        Solution {
            variant: Variant::Mz,
            states: vec![x, x],
            inputs: vec![ControlInput {
                p_b,
                ..Default::default()
            }],
            objective: 0.0,
            objective_history: vec![0.0],
            status: SolverStatus::Converged,
            iterations: 0,
            qp_iterations: 0,
            friction_violation: 0.0,
        }
    }

    #[test]
    fn saturated_wheels_leave_no_moment() {
        let m = model();
        let loads = [2000.0; 4];
        // 0.5 * fx_f = -mu * Fz on the front, rear likewise with p_b = 0.5.
        let sol = previous_with(-2.0 * 0.6 * 2000.0, 0.5);
        let env = mz_envelope(Some(&sol), &loads, 0.6, &m);
        assert_eq!(env, MzEnvelope { mz_min: 0.0, mz_max: 0.0 });
    }

    #[test]
    fn asymmetric_loads_give_asymmetric_envelope() {
        let m = model();
        // Left turn: load shifted to the right wheels.
        let loads = wheel_loads(-2.0, 4.0, &m.vehicle);
        let sol = previous_with(-1500.0, 0.7);
        let env = mz_envelope(Some(&sol), &loads, 0.6, &m);
        assert!(env.mz_max.abs() != env.mz_min.abs());
        // The lightly loaded left side bounds the positive moment.
        assert!(env.mz_max < -env.mz_min);
        let fx_r = m.rear_force(-1500.0, 0.7);
        let fx = [-750.0, -750.0, 0.5 * fx_r, 0.5 * fx_r];
        let (lo, hi) = envelope_oracle(fx, [true; 4], &loads, 0.6, m.vehicle.track_width);
        assert!((env.mz_min - lo).abs() < 1e-9 && (env.mz_max - hi).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn envelope_is_sound(
            fl in 500.0f64..4000.0, fr in 500.0f64..4000.0,
            rl in 500.0f64..4000.0, rr in 500.0f64..4000.0,
            mu in 0.2f64..1.1,
            fx_frac in -1.0f64..0.3,
            p_b in 0.3f64..0.9,
            t in 0.0f64..1.0,
        ) {
            let m = model();
            let loads = [fl, fr, rl, rr];
            let fx_f = fx_frac * mu * fl.min(fr);
            let sol = previous_with(fx_f, p_b);
            let base = allocate(
                &ActuatorCommand { fx_f, p_b, ..Default::default() },
                &loads, mu, Variant::Mz, &m,
            );
            prop_assume!(!base.saturated);
            let env = mz_envelope(Some(&sol), &loads, mu, &m);
            prop_assert!(env.mz_min <= env.mz_max);
            for mz in [env.mz_min * t, env.mz_max * t, env.mz_min, env.mz_max] {
                let cmd = ActuatorCommand { fx_f, p_b, mz, ..Default::default() };
                let a = allocate(&cmd, &loads, mu, Variant::Mz, &m);
                for i in 0..4 {
                    prop_assert!(a.wheel_forces[i].abs() <= mu * loads[i] * (1.0 + 1e-9) + 1e-9);
                }
                prop_assert!(!a.saturated, "mz {mz} in [{}, {}]", env.mz_min, env.mz_max);
            }
        }

        #[test]
        fn allocation_inverts(
            fx_f in -3000.0f64..1500.0,
            p_b in 0.3f64..0.9,
            mz in -1500.0f64..1500.0,
        ) {
            let m = model();
            let loads = [4000.0; 4];
            let cmd = ActuatorCommand { fx_f, p_b, mz, ..Default::default() };
            let a = allocate(&cmd, &loads, 1.0, Variant::MzDr, &m);
            prop_assume!(!a.saturated);
            let (fx, mzr) = totals(&a, m.vehicle.track_width);
            let want_fx = fx_f + m.rear_force(fx_f, p_b) - a.fx_mz;
            prop_assert!((fx - want_fx).abs() <= 1e-9 * want_fx.abs().max(1.0));
            prop_assert!((mzr - mz).abs() <= 1e-9 * mz.abs().max(1.0));
            for (i, t) in a.command.brake_torque.iter().enumerate() {
                prop_assert!(*t >= 0.0);
                prop_assert!(!(*t > 0.0 && a.command.drive_torque[i / 2] > 0.0));
            }
        }
    }
}
