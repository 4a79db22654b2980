//! Fixed-rate closed loop: measure, project, solve, allocate, supervise,
//! integrate the plant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{allocate, mz_envelope, yaw_rate_reference, ActuatorCommand, Vsc};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::nmpc::{Nmpc, OnlineData, Solution, SolverStatus};
use crate::scenario::{build_path, compute_kpis, project_to_path, KpiReport, PathRef, Scenario};
use crate::variant::Variant;
use crate::vehicle::{measure, sideslip, wheel_loads, PlantState, PredictionState};

/// One row per control period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    pub ax: f64,
    pub ay: f64,
    pub s: f64,
    pub e_y: f64,
    pub e_psi: f64,
    pub beta: f64,
    pub vx_ref: f64,
    pub rho: f64,
    /// Actuator targets sent this period.
    pub cmd_delta_f: f64,
    pub cmd_delta_r: f64,
    pub cmd_fx_f: f64,
    pub cmd_p_b: f64,
    pub cmd_mz: f64,
    /// First-stage rates.
    pub cmd_ddelta_f: f64,
    pub cmd_dfx_f: f64,
    pub cmd_dmz: f64,
    pub cmd_ddelta_r: f64,
    pub eps_mz: f64,
    pub mz_min: f64,
    pub mz_max: f64,
    /// Mean plant yaw moment of the longitudinal tyre forces over the period.
    pub mz_plant: f64,
    pub brake_fl: f64,
    pub brake_fr: f64,
    pub brake_rl: f64,
    pub brake_rr: f64,
    pub drive_front: f64,
    pub drive_rear: f64,
    pub slip_fl: f64,
    pub slip_fr: f64,
    pub slip_rl: f64,
    pub slip_rr: f64,
    pub saturated: bool,
    pub solver_status: SolverStatus,
    pub sqp_iterations: usize,
    pub qp_iterations: usize,
    pub objective: f64,
    pub friction_violation: f64,
    /// Plant substeps with a stability intervention / ABS release.
    pub vsc_steps: u32,
    pub abs_steps: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunOutcome {
    Completed,
    Dnf { reason: String },
    SolverFailure { message: String },
}

impl RunOutcome {
    /// Process exit code of the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunOutcome::Completed => 0,
            RunOutcome::Dnf { .. } => 2,
            RunOutcome::SolverFailure { .. } => 3,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, RunOutcome::Completed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub variant: Variant,
    pub scenario: Scenario,
    pub delta_r_max_deg: f64,
    pub outcome: RunOutcome,
    pub trace: Vec<TraceSample>,
}

impl RunResult {
    pub fn kpis(&self) -> Result<KpiReport> {
        compute_kpis(&self.trace)
    }
}

/// Stop the run when the vehicle is within this distance of the path end.
const END_MARGIN_M: f64 = 0.5;
/// Below this speed the manoeuvre counts as abandoned.
const STALL_SPEED_M_S: f64 = 1.0;

pub fn run_closed_loop(
    variant: Variant,
    scenario: Scenario,
    config: &Config,
    seed: u64,
) -> Result<RunResult> {
    config.validate()?;
    let path = build_path(scenario, &config.scenario)?;
    run_on_path(variant, scenario, &path, config, seed)
}

fn stage_previews(path: &PathRef, s: f64, vx: f64, hp: usize, ts: f64) -> (Vec<f64>, Vec<f64>) {
    let v = vx.max(0.0);
    let rho = (0..hp).map(|k| path.curvature(s + v * k as f64 * ts)).collect();
    let vref = (1..=hp).map(|k| path.vx_ref_at(s + v * k as f64 * ts)).collect();
    (rho, vref)
}

pub(crate) fn run_on_path(
    variant: Variant,
    scenario: Scenario,
    path: &PathRef,
    config: &Config,
    seed: u64,
) -> Result<RunResult> {
    let sc = &config.scenario;
    let model = config.prediction_model();
    let plant = config.plant();
    let ocp = &config.ocp;
    let mut nmpc = Nmpc::new(variant, model.clone(), ocp.clone());
    let mut vsc_cfg = config.vsc.clone();
    vsc_cfg.relaxed = variant.relaxed_vsc();
    let mut vsc = Vsc::new(vsc_cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let ts = ocp.ts;
    let substeps = (ts / plant.config.dt).round() as usize;
    let dt = ts / substeps as f64;
    let mu = sc.mu;
    let b = &ocp.bounds;

    let x0 = path.x[0];
    let y0 = path.y[0];
    let mut ps = PlantState::rolling(x0, y0, path.psi[0], sc.v0_m_s, config.vehicle.wheel_radius);
    let mut act = ActuatorCommand {
        p_b: model.config.p_b_nominal,
        ..Default::default()
    };
    let mut prev: Option<Solution> = None;
    let mut s_prev = 0.0;
    let mut trace = Vec::new();
    let mut t = 0.0;
    let mut step = 0usize;

    let outcome = loop {
        let meas = measure(&ps, &config.noise, &mut rng);
        let proj = match project_to_path(
            meas.x,
            meas.y,
            meas.psi,
            path,
            Some((s_prev, sc.projection_window_m)),
            sc.corridor_m,
        )
        .or_else(|_| project_to_path(meas.x, meas.y, meas.psi, path, None, sc.corridor_m))
        {
            Ok(p) => p,
            Err(Error::OffPath { distance, .. }) => {
                break RunOutcome::Dnf {
                    reason: format!("left the {} m corridor ({distance:.1} m off)", sc.corridor_m),
                }
            }
            Err(e) => return Err(e),
        };
        s_prev = proj.s;
        if proj.s >= path.length() - END_MARGIN_M {
            break RunOutcome::Completed;
        }
        if t > sc.timeout_s {
            break RunOutcome::Dnf {
                reason: format!("timeout after {:.1} s", sc.timeout_s),
            };
        }
        if meas.vx < STALL_SPEED_M_S {
            break RunOutcome::Dnf {
                reason: format!("stopped at s = {:.1} m", proj.s),
            };
        }

        let x_pred = PredictionState {
            vx: meas.vx,
            vy: meas.vy,
            yaw_rate: meas.yaw_rate,
            s: proj.s,
            e_y: proj.e_y,
            e_psi: proj.e_psi,
            delta_f: act.delta_f,
            fx_f: act.fx_f,
            mz: act.mz,
            delta_r: act.delta_r,
        };
        let (rho_ref, vx_ref) = stage_previews(path, proj.s, meas.vx, ocp.horizon, ts);
        let est_loads = wheel_loads(meas.ax, meas.ay, &config.vehicle);
        let env = if variant.has_yaw_moment() {
            mz_envelope(prev.as_ref(), &est_loads, mu, &model)
        } else {
            crate::allocation::MzEnvelope {
                mz_min: 0.0,
                mz_max: 0.0,
            }
        };
        let online = OnlineData {
            ax_meas: meas.ax,
            mu,
            rho_ref,
            mz_min: env.mz_min,
            mz_max: env.mz_max,
        };
        let sol = match nmpc.solve(&x_pred, &online, &vx_ref) {
            Ok(s) => s,
            Err(e) => {
                break RunOutcome::SolverFailure {
                    message: e.to_string(),
                }
            }
        };

        // Zero-order hold of the first stage: the actuator targets become
        // the predicted actuator states one stage ahead.
        let u0 = sol.command();
        act.delta_f = (act.delta_f + ts * u0.ddelta_f).clamp(-b.delta_f_max, b.delta_f_max);
        act.fx_f += ts * u0.dfx_f;
        if variant.has_yaw_moment() {
            act.p_b = u0.p_b;
            act.mz += ts * u0.dmz;
        }
        if variant.has_rear_steer() {
            act.delta_r = (act.delta_r + ts * u0.ddelta_r).clamp(-b.delta_r_max, b.delta_r_max);
        }

        let alloc = allocate(&act, &est_loads, mu, variant, &model);
        let mut vsc_steps = 0;
        let mut abs_steps = 0;
        let mut mz_plant = 0.0;
        for _ in 0..substeps {
            let forces = plant.wheel_forces(&ps);
            mz_plant += plant.longitudinal_yaw_moment(&forces);
            let slip = forces.map(|f| f.slip_ratio);
            let r_ref = yaw_rate_reference(
                ps.vx,
                act.delta_f,
                act.delta_r,
                config.vehicle.wheelbase(),
                mu,
                config.vehicle.g,
                vsc.config.yaw_reference_friction_fraction,
            );
            let beta = sideslip(ps.vx, ps.vy);
            let (cmd, decision, abs_on) =
                vsc.apply(&alloc.command, ps.yaw_rate, r_ref, beta, &slip, dt);
            vsc_steps += decision.intervene as u32;
            abs_steps += abs_on.iter().any(|&a| a) as u32;
            ps = plant.step(&ps, &cmd, dt);
        }
        let slip_end = plant.wheel_forces(&ps).map(|f| f.slip_ratio);

        trace.push(TraceSample {
            t,
            x: meas.x,
            y: meas.y,
            psi: meas.psi,
            vx: meas.vx,
            vy: meas.vy,
            yaw_rate: meas.yaw_rate,
            ax: meas.ax,
            ay: meas.ay,
            s: proj.s,
            e_y: proj.e_y,
            e_psi: proj.e_psi,
            beta: meas.beta,
            vx_ref: path.vx_ref_at(proj.s),
            rho: path.curvature(proj.s),
            cmd_delta_f: act.delta_f,
            cmd_delta_r: act.delta_r,
            cmd_fx_f: act.fx_f,
            cmd_p_b: act.p_b,
            cmd_mz: act.mz,
            cmd_ddelta_f: u0.ddelta_f,
            cmd_dfx_f: u0.dfx_f,
            cmd_dmz: u0.dmz,
            cmd_ddelta_r: u0.ddelta_r,
            eps_mz: u0.eps_mz,
            mz_min: env.mz_min,
            mz_max: env.mz_max,
            mz_plant: mz_plant / substeps as f64,
            brake_fl: alloc.command.brake_torque[0],
            brake_fr: alloc.command.brake_torque[1],
            brake_rl: alloc.command.brake_torque[2],
            brake_rr: alloc.command.brake_torque[3],
            drive_front: alloc.command.drive_torque[0],
            drive_rear: alloc.command.drive_torque[1],
            slip_fl: slip_end[0],
            slip_fr: slip_end[1],
            slip_rl: slip_end[2],
            slip_rr: slip_end[3],
            saturated: alloc.saturated,
            solver_status: sol.status,
            sqp_iterations: sol.iterations,
            qp_iterations: sol.qp_iterations,
            objective: sol.objective,
            friction_violation: sol.friction_violation,
            vsc_steps,
            abs_steps,
        });
        prev = Some(sol);
        step += 1;
        t = step as f64 * ts;
    };

    Ok(RunResult {
        variant,
        scenario,
        delta_r_max_deg: config.ocp.bounds.delta_r_max.to_degrees(),
        outcome,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{PathRef, SpeedProfile};

    #[test]
    fn straight_regulation() {
        let mut c = Config::default();
        c.scenario.timeout_s = 5.0;
        let sp = SpeedProfile {
            v0: c.scenario.v0_m_s,
            corner: c.scenario.v0_m_s,
            decel: 0.0,
            brake_start: 0.0,
        };
        let path = PathRef::from_pieces(&[(40.0, 0.0, 0.0)], 0.1, sp).unwrap();
        let r = run_on_path(Variant::Mz, Scenario::Turn135, &path, &c, 1).unwrap();
        assert!(r.outcome.is_completed(), "{:?}", r.outcome);
        let max = r.trace.iter().map(|s| s.e_y.abs()).fold(0.0, f64::max);
        assert!(max < 0.05, "{max}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunOutcome::Completed.exit_code(), 0);
        assert_eq!(RunOutcome::Dnf { reason: String::new() }.exit_code(), 2);
        assert_eq!(
            RunOutcome::SolverFailure {
                message: String::new()
            }
            .exit_code(),
            3
        );
    }
}
