//! Gauss-Newton SQP over a single-shooting transcription.
//!
//! Decision variables are the stage inputs, scaled by their bound
//! magnitudes. Each iteration linearises the rollout (exact RK4
//! sensitivities), solves the condensed QP with the rate/magnitude/split
//! bounds and the slackened yaw-moment envelope as hard linear constraints,
//! repairs the candidate onto the feasible set, and backtracks on the true
//! objective. The axle friction inequalities enter as a quadratic penalty.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nmpc::constraints::{
    friction_constraints_generic, minimal_slack, normalized_friction_violation,
};
use crate::nmpc::cost::{output_indices, output_reference, stage_cost};
use crate::nmpc::discretize::{rk4, step_jacobians, D};
use crate::nmpc::qp::{self, QpProblem, SparseRow};
use crate::nmpc::OcpConfig;
use crate::variant::{sx, ux, Variant};
use crate::vehicle::{ControlInput, PredictionModel, PredictionState, StageData};

/// Exogenous data over the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineData {
    pub ax_meas: f64,
    pub mu: f64,
    /// Curvature preview, one value per stage.
    pub rho_ref: Vec<f64>,
    pub mz_min: f64,
    pub mz_max: f64,
}

impl OnlineData {
    pub fn stage(&self, k: usize) -> StageData {
        StageData {
            ax_meas: self.ax_meas,
            mu: self.mu,
            rho: self.rho_ref[k],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    /// A trial rollout produced singular or non-finite dynamics; the last
    /// valid iterate is returned.
    InfeasibleRelaxed,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIterations => "max-iterations",
            SolverStatus::InfeasibleRelaxed => "infeasible-relaxed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub variant: Variant,
    /// Predicted states, `horizon + 1` entries starting at the initial state.
    pub states: Vec<PredictionState>,
    pub inputs: Vec<ControlInput>,
    pub objective: f64,
    /// Objective after the initial guess and after every accepted iteration.
    pub objective_history: Vec<f64>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub qp_iterations: usize,
    /// Largest normalised friction violation at the first predicted stage.
    pub friction_violation: f64,
}

impl Solution {
    /// First-stage input.
    pub fn command(&self) -> ControlInput {
        self.inputs[0]
    }
}

type Inputs = Vec<[f64; ux::LEN]>;

/// Controller instance for one variant. Holds the warm start between calls.
#[derive(Clone, Debug)]
pub struct Nmpc {
    pub variant: Variant,
    pub model: PredictionModel,
    pub config: OcpConfig,
    warm: Option<Solution>,
}

struct Problem<'a> {
    variant: Variant,
    model: &'a PredictionModel,
    cfg: &'a OcpConfig,
    x0: [f64; sx::LEN],
    w: &'a OnlineData,
    vx_ref: &'a [f64],
    mu_id: f64,
    lo: [f64; ux::LEN],
    hi: [f64; ux::LEN],
    scale: [f64; ux::LEN],
    u_ref: [f64; ux::LEN],
    reg: [f64; ux::LEN],
}

impl Nmpc {
    pub fn new(variant: Variant, model: PredictionModel, config: OcpConfig) -> Self {
        Self {
            variant,
            model,
            config,
            warm: None,
        }
    }

    pub fn warm_start(&self) -> Option<&Solution> {
        self.warm.as_ref()
    }

    pub fn reset(&mut self) {
        self.warm = None;
    }

    /// Solve from `x0`, warm-started from the previous solution, and keep
    /// the result for the next call.
    pub fn solve(
        &mut self,
        x0: &PredictionState,
        w: &OnlineData,
        vx_ref: &[f64],
    ) -> Result<Solution> {
        let sol = self.solve_ocp(x0, w, vx_ref, self.warm.as_ref())?;
        self.warm = Some(sol.clone());
        Ok(sol)
    }

    fn problem<'a>(
        &'a self,
        x0: &PredictionState,
        w: &'a OnlineData,
        vx_ref: &'a [f64],
    ) -> Result<Problem<'a>> {
        let hp = self.config.horizon;
        if w.rho_ref.len() != hp {
            return Err(Error::Dimension {
                expected: hp,
                got: w.rho_ref.len(),
            });
        }
        if vx_ref.len() != hp {
            return Err(Error::Dimension {
                expected: hp,
                got: vx_ref.len(),
            });
        }
        if !(w.mz_min <= w.mz_max) {
            return Err(Error::Config(format!(
                "yaw-moment envelope [{}, {}] is empty",
                w.mz_min, w.mz_max
            )));
        }
        let b = &self.config.bounds;
        let iw = &self.config.input_weights;
        let mut lo = [0.0; ux::LEN];
        let mut hi = [0.0; ux::LEN];
        lo[ux::DDELTA_F] = -b.ddelta_f_max;
        hi[ux::DDELTA_F] = b.ddelta_f_max;
        lo[ux::DFX_F] = b.dfx_f_min;
        hi[ux::DFX_F] = b.dfx_f_max;
        lo[ux::P_B] = b.p_b_min;
        hi[ux::P_B] = b.p_b_max;
        lo[ux::DMZ] = b.dmz_min;
        hi[ux::DMZ] = b.dmz_max;
        lo[ux::EPS_MZ] = 0.0;
        hi[ux::EPS_MZ] = f64::INFINITY;
        lo[ux::DDELTA_R] = -b.ddelta_r_max;
        hi[ux::DDELTA_R] = b.ddelta_r_max;
        let scale = [
            b.ddelta_f_max,
            b.dfx_f_min.abs().max(b.dfx_f_max.abs()),
            1.0,
            b.dmz_min.abs().max(b.dmz_max.abs()).max(1.0),
            self.config.slack_scale,
            b.ddelta_r_max.max(1e-6),
        ];
        let mut u_ref = [0.0; ux::LEN];
        u_ref[ux::P_B] = self.model.config.p_b_nominal;
        let reg = [iw.ddelta_f, iw.dfx_f, iw.p_b, iw.dmz, 0.0, iw.ddelta_r];
        Ok(Problem {
            variant: self.variant,
            model: &self.model,
            cfg: &self.config,
            x0: x0.restricted(self.variant).to_array(),
            w,
            vx_ref,
            mu_id: self.config.mu_id(w.mu),
            lo,
            hi,
            scale,
            u_ref,
            reg,
        })
    }

    /// Objective of an input sequence (variant layout, one entry per stage).
    pub fn objective_of(
        &self,
        x0: &PredictionState,
        w: &OnlineData,
        vx_ref: &[f64],
        inputs: &[ControlInput],
    ) -> Result<f64> {
        let p = self.problem(x0, w, vx_ref)?;
        let u: Inputs = inputs.iter().map(|c| p.masked(c.to_array())).collect();
        let xs = p.rollout(&u)?;
        Ok(p.objective(&xs, &u))
    }

    /// One receding-horizon solve; does not touch the stored warm start.
    pub fn solve_ocp(
        &self,
        x0: &PredictionState,
        w: &OnlineData,
        vx_ref: &[f64],
        warm: Option<&Solution>,
    ) -> Result<Solution> {
        let p = self.problem(x0, w, vx_ref)?;
        let hp = self.config.horizon;

        let cold = || {
            let mut u = p.masked([0.0; ux::LEN]);
            u[ux::P_B] = p.u_ref[ux::P_B].clamp(p.lo[ux::P_B], p.hi[ux::P_B]);
            vec![p.masked(u); hp]
        };
        let mut start = Vec::new();
        if let Some(ws) = warm.filter(|s| s.variant == self.variant && s.inputs.len() == hp) {
            let mut u: Inputs = ws.inputs[1..].iter().map(|c| p.masked(c.to_array())).collect();
            let mut last = *u.last().unwrap_or(&[0.0; ux::LEN]);
            for j in [ux::DDELTA_F, ux::DFX_F, ux::DMZ, ux::DDELTA_R] {
                last[j] = 0.0;
            }
            u.push(last);
            start.push(u);
        }
        start.push(cold());

        let mut init = None;
        let mut last_err = None;
        for mut u in start {
            p.repair(&mut u);
            match p.rollout(&u) {
                Ok(xs) => {
                    init = Some((u, xs));
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        let Some((mut u, mut xs)) = init else {
            return Err(last_err.expect("at least one start was tried"));
        };

        let mut j = p.objective(&xs, &u);
        let mut history = vec![j];
        let mut status = SolverStatus::MaxIterations;
        let mut iterations = 0;
        let mut qp_iterations = 0;
        let tol = self.config.tolerance;

        for _ in 0..self.config.sqp_max_iter {
            iterations += 1;
            let (h, g) = p.linearize(&u, &xs)?;
            let qp = p.qp(&u, h, g.clone());
            let sol = qp::solve(&qp, &self.config.qp);
            qp_iterations += sol.iterations;

            // Candidate, repaired onto the feasible set, defines the direction.
            let mut cand = u.clone();
            p.apply_scaled_step(&mut cand, &sol.x, 1.0);
            p.repair(&mut cand);
            let dir = p.difference_scaled(&cand, &u);
            let step_norm = dir.amax();
            let slope = g.dot(&dir);

            let mut accepted = None;
            let mut rollout_failed = false;
            let mut alpha = 1.0;
            for _ in 0..12 {
                let mut trial = u.clone();
                p.apply_scaled_step(&mut trial, &dir, alpha);
                p.tighten_slack(&mut trial);
                match p.rollout(&trial) {
                    Ok(xt) => {
                        let jt = p.objective(&xt, &trial);
                        if jt <= j + 1e-4 * alpha * slope.min(0.0) && jt.is_finite() {
                            accepted = Some((trial, xt, jt));
                            break;
                        }
                    }
                    Err(_) => rollout_failed = true,
                }
                alpha *= 0.5;
            }

            match accepted {
                Some((trial, xt, jt)) => {
                    let decrease = j - jt;
                    u = trial;
                    xs = xt;
                    j = jt;
                    history.push(j);
                    if alpha * step_norm <= tol || decrease <= 1e-10 * (1.0 + j.abs()) {
                        status = SolverStatus::Converged;
                        break;
                    }
                }
                None => {
                    status = if rollout_failed {
                        SolverStatus::InfeasibleRelaxed
                    } else if step_norm <= tol.sqrt() || -slope <= 1e-8 * (1.0 + j.abs()) {
                        SolverStatus::Converged
                    } else {
                        SolverStatus::MaxIterations
                    };
                    break;
                }
            }
        }

        let friction_violation = p.friction_violation(&xs, &u, 1);
        Ok(Solution {
            variant: self.variant,
            states: xs.iter().map(PredictionState::from_array).collect(),
            inputs: u
                .iter()
                .map(|a| {
                    let mut a = *a;
                    if !self.variant.has_yaw_moment() {
                        a[ux::P_B] = self.model.config.p_b_nominal;
                    }
                    ControlInput::from_array(&a)
                })
                .collect(),
            objective: j,
            objective_history: history,
            status,
            iterations,
            qp_iterations,
            friction_violation,
        })
    }
}

impl Problem<'_> {
    fn nu(&self) -> usize {
        self.variant.nu()
    }

    fn hp(&self) -> usize {
        self.cfg.horizon
    }

    fn masked(&self, mut u: [f64; ux::LEN]) -> [f64; ux::LEN] {
        u[self.nu()..].iter_mut().for_each(|v| *v = 0.0);
        u
    }

    fn rollout(&self, u: &Inputs) -> Result<Vec<[f64; sx::LEN]>> {
        let mut xs = Vec::with_capacity(u.len() + 1);
        xs.push(self.x0);
        for (k, uk) in u.iter().enumerate() {
            let next = rk4(
                self.model,
                self.variant,
                &xs[k],
                uk,
                &self.w.stage(k),
                self.cfg.ts,
            )?;
            xs.push(next);
        }
        Ok(xs)
    }

    fn stage_weights(&self, k: usize) -> Vec<f64> {
        if k == self.hp() {
            self.cfg.terminal_weights.for_variant(self.variant)
        } else {
            self.cfg.stage_weights.for_variant(self.variant)
        }
    }

    fn friction_terms(&self, x: &[f64; sx::LEN], u: &[f64; ux::LEN]) -> (f64, f64) {
        let loads = self.model.loads(&self.w.stage(0));
        let r = friction_constraints_generic(self.model, self.variant, x, u, &loads, self.mu_id);
        let vf = (-r.front_lower.min(r.front_upper)).max(0.0) / (self.mu_id * loads.fz_f).max(1.0);
        let vr = (-r.rear_lower.min(r.rear_upper)).max(0.0) / (self.mu_id * loads.fz_r).max(1.0);
        (vf, vr)
    }

    fn friction_violation(&self, xs: &[[f64; sx::LEN]], u: &Inputs, k: usize) -> f64 {
        let loads = self.model.loads(&self.w.stage(0));
        let r = friction_constraints_generic(
            self.model,
            self.variant,
            &xs[k],
            &u[k - 1],
            &loads,
            self.mu_id,
        );
        normalized_friction_violation(&r, &loads, self.mu_id)
    }

    fn objective(&self, xs: &[[f64; sx::LEN]], u: &Inputs) -> f64 {
        let has_mz = self.variant.has_yaw_moment();
        let mut j = 0.0;
        for k in 1..=self.hp() {
            let idx = output_indices(self.variant);
            let z: Vec<f64> = idx.iter().map(|&i| xs[k][i]).collect();
            let zr = output_reference(self.variant, self.vx_ref[k - 1]);
            let eps = if has_mz { u[k - 1][ux::EPS_MZ] } else { 0.0 };
            j += stage_cost(
                &z,
                &zr,
                &self.stage_weights(k),
                self.cfg.slack_linear,
                self.cfg.slack_quadratic,
                eps,
            );
            let (vf, vr) = self.friction_terms(&xs[k], &u[k - 1]);
            j += self.cfg.friction_penalty * (vf * vf + vr * vr);
        }
        for uk in u {
            for jx in 0..self.nu() {
                let d = uk[jx] - self.u_ref[jx];
                j += self.reg[jx] * d * d;
            }
        }
        j
    }

    /// Gauss-Newton Hessian and gradient in scaled variables.
    fn linearize(&self, u: &Inputs, xs: &[[f64; sx::LEN]]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let (nx, nu, hp) = (self.variant.nx(), self.nu(), self.hp());
        let n = hp * nu;
        let idx = output_indices(self.variant);
        let ny = idx.len();
        let rows_per = ny + 2;
        let mut jr = DMatrix::<f64>::zeros(hp * rows_per, n);
        let mut r = DVector::<f64>::zeros(hp * rows_per);
        let mut sens = DMatrix::<f64>::zeros(nx, n);
        let loads = self.model.loads(&self.w.stage(0));
        let pen = self.cfg.friction_penalty.sqrt();

        for k in 0..hp {
            let (_, a, b) = step_jacobians(
                self.model,
                self.variant,
                &xs[k],
                &u[k],
                &self.w.stage(k),
                self.cfg.ts,
            )?;
            // S_{k+1} = A S_k + B diag(scale) on the block of stage k.
            let cols = k * nu;
            let mut next = DMatrix::<f64>::zeros(nx, n);
            if cols > 0 {
                let prod = &a * sens.columns(0, cols);
                next.columns_mut(0, cols).copy_from(&prod);
            }
            for jx in 0..nu {
                for i in 0..nx {
                    next[(i, cols + jx)] = b[(i, jx)] * self.scale[jx];
                }
            }
            sens = next;

            let stage = k + 1;
            let weights = self.stage_weights(stage);
            let zr = output_reference(self.variant, self.vx_ref[k]);
            let row0 = k * rows_per;
            let active = (k + 1) * nu;
            for (o, &si) in idx.iter().enumerate() {
                let sw = weights[o].sqrt();
                r[row0 + o] = sw * (xs[stage][si] - zr[o]);
                for c in 0..active {
                    jr[(row0 + o, c)] = sw * sens[(si, c)];
                }
            }

            // Friction penalty rows via dual evaluation of the residuals.
            let xd: [D; sx::LEN] = std::array::from_fn(|i| D::variable(xs[stage][i], i));
            let ud: [D; ux::LEN] = std::array::from_fn(|jx| D::variable(u[k][jx], sx::LEN + jx));
            let fr = friction_constraints_generic(self.model, self.variant, &xd, &ud, &loads, self.mu_id);
            let axles = [
                (fr.front_lower, fr.front_upper, self.mu_id * loads.fz_f),
                (fr.rear_lower, fr.rear_upper, self.mu_id * loads.fz_r),
            ];
            for (ai, (lower, upper, cap)) in axles.into_iter().enumerate() {
                let active_res = if lower.re < upper.re { lower } else { upper };
                let row = row0 + ny + ai;
                if active_res.re < 0.0 {
                    let c = pen / cap.max(1.0);
                    r[row] = -c * active_res.re;
                    for col in 0..active {
                        let mut v = 0.0;
                        for i in 0..nx {
                            v += active_res.eps[i] * sens[(i, col)];
                        }
                        jr[(row, col)] = -c * v;
                    }
                    for jx in 0..nu {
                        jr[(row, k * nu + jx)] += -c * active_res.eps[sx::LEN + jx] * self.scale[jx];
                    }
                }
            }
        }

        let mut h = jr.tr_mul(&jr) * 2.0;
        let mut g = jr.tr_mul(&r) * 2.0;
        let has_mz = self.variant.has_yaw_moment();
        for k in 0..hp {
            for jx in 0..nu {
                let c = k * nu + jx;
                let sc = self.scale[jx];
                let mut hd = 2.0 * self.reg[jx] * sc * sc;
                let mut gd = 2.0 * self.reg[jx] * (u[k][jx] - self.u_ref[jx]) * sc;
                if jx == ux::EPS_MZ && has_mz {
                    hd += 2.0 * self.cfg.slack_quadratic * sc * sc;
                    gd += (2.0 * self.cfg.slack_quadratic * u[k][jx] + self.cfg.slack_linear) * sc;
                }
                h[(c, c)] += hd + 1e-9;
                g[c] += gd;
            }
        }
        Ok((h, g))
    }

    /// QP in the scaled step with bounds expressed around the current iterate.
    fn qp(&self, u: &Inputs, h: DMatrix<f64>, g: DVector<f64>) -> QpProblem {
        let (nu, hp) = (self.nu(), self.hp());
        let ts = self.cfg.ts;
        let mut rows: Vec<SparseRow> = Vec::new();
        let mut l = Vec::new();
        let mut up = Vec::new();

        for k in 0..hp {
            for jx in 0..nu {
                let sc = self.scale[jx];
                rows.push(vec![(k * nu + jx, 1.0)]);
                l.push((self.lo[jx] - u[k][jx]) / sc);
                up.push((self.hi[jx] - u[k][jx]) / sc);
            }
        }

        let mut steer_rows = |state: usize, input: usize, max: f64| {
            let mut d = self.x0[state];
            let mut row: SparseRow = Vec::new();
            for k in 0..hp {
                d += ts * u[k][input];
                row.push((k * nu + input, ts * self.scale[input]));
                rows.push(row.clone());
                l.push(-max - d);
                up.push(max - d);
            }
        };
        steer_rows(sx::DELTA_F, ux::DDELTA_F, self.cfg.bounds.delta_f_max);
        if self.variant.has_rear_steer() {
            steer_rows(sx::DELTA_R, ux::DDELTA_R, self.cfg.bounds.delta_r_max);
        }

        if self.variant.has_yaw_moment() {
            let se = self.scale[ux::EPS_MZ];
            let mut mz = self.x0[sx::MZ];
            let mut cum: SparseRow = Vec::new();
            for k in 0..hp {
                let eps = u[k][ux::EPS_MZ];
                let mut upper = cum.clone();
                upper.push((k * nu + ux::EPS_MZ, -se));
                rows.push(upper);
                l.push(f64::NEG_INFINITY);
                up.push(self.w.mz_max - (mz - eps));
                let mut lower = cum.clone();
                lower.push((k * nu + ux::EPS_MZ, se));
                rows.push(lower);
                l.push(self.w.mz_min - (mz + eps));
                up.push(f64::INFINITY);

                mz += ts * u[k][ux::DMZ];
                cum.push((k * nu + ux::DMZ, ts * self.scale[ux::DMZ]));
            }
        }

        QpProblem {
            p: h,
            q: g,
            a: rows,
            l: DVector::from_vec(l),
            u: DVector::from_vec(up),
        }
    }

    fn apply_scaled_step(&self, u: &mut Inputs, step: &DVector<f64>, alpha: f64) {
        let nu = self.nu();
        for (k, uk) in u.iter_mut().enumerate() {
            for jx in 0..nu {
                uk[jx] += alpha * step[k * nu + jx] * self.scale[jx];
            }
        }
    }

    fn difference_scaled(&self, a: &Inputs, b: &Inputs) -> DVector<f64> {
        let nu = self.nu();
        DVector::from_fn(self.hp() * nu, |c, _| {
            let (k, jx) = (c / nu, c % nu);
            (a[k][jx] - b[k][jx]) / self.scale[jx]
        })
    }

    /// Project onto the input boxes, then roll the steering angles forward
    /// clipping any stage that would leave its magnitude bound, then set
    /// every slack to the least admissible value.
    fn repair(&self, u: &mut Inputs) {
        let nu = self.nu();
        for uk in u.iter_mut() {
            for jx in 0..nu {
                uk[jx] = uk[jx].clamp(self.lo[jx], self.hi[jx]);
            }
        }
        let ts = self.cfg.ts;
        let mut clip = |state: usize, input: usize, max: f64| {
            let mut d = self.x0[state];
            for uk in u.iter_mut() {
                let next = d + ts * uk[input];
                if next > max {
                    uk[input] = ((max - d) / ts).clamp(self.lo[input], self.hi[input]);
                } else if next < -max {
                    uk[input] = ((-max - d) / ts).clamp(self.lo[input], self.hi[input]);
                }
                d += ts * uk[input];
            }
        };
        clip(sx::DELTA_F, ux::DDELTA_F, self.cfg.bounds.delta_f_max);
        if self.variant.has_rear_steer() {
            clip(sx::DELTA_R, ux::DDELTA_R, self.cfg.bounds.delta_r_max);
        }
        self.tighten_slack(u);
    }

    fn tighten_slack(&self, u: &mut Inputs) {
        if !self.variant.has_yaw_moment() {
            return;
        }
        let mut mz = self.x0[sx::MZ];
        for uk in u.iter_mut() {
            uk[ux::EPS_MZ] = minimal_slack(mz, self.w.mz_min, self.w.mz_max);
            mz += self.cfg.ts * uk[ux::DMZ];
        }
    }
}
