use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::TraceSample;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    /// [m]
    pub ey_max_abs: f64,
    /// [m]
    pub rms_ey: f64,
    /// [km/h]
    pub rms_evx: f64,
    /// [deg]
    pub beta_max_abs: f64,
}

/// Path-tracking indicators over a uniformly sampled trace.
pub fn compute_kpis(trace: &[TraceSample]) -> Result<KpiReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = trace.len() as f64;
    let mut ey_max: f64 = 0.0;
    let mut beta_max: f64 = 0.0;
    let mut ey2 = 0.0;
    let mut ev2 = 0.0;
    for s in trace {
        ey_max = ey_max.max(s.e_y.abs());
        beta_max = beta_max.max(s.beta.abs());
        ey2 += s.e_y * s.e_y;
        let ev = (s.vx - s.vx_ref) * 3.6;
        ev2 += ev * ev;
    }
    Ok(KpiReport {
        ey_max_abs: ey_max,
        // Guard against the last-bit excess of the mean of equal squares.
        rms_ey: (ey2 / n).sqrt().min(ey_max),
        rms_evx: (ev2 / n).sqrt(),
        beta_max_abs: beta_max.to_degrees(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::nmpc::SolverStatus;
    use proptest::prelude::*;

    pub(crate) fn sample(t: f64, e_y: f64, beta: f64, vx: f64, vx_ref: f64) -> TraceSample {
        TraceSample {
            t,
            x: 0.0,
            y: 0.0,
            psi: 0.0,
            vx,
            vy: vx * beta.tan(),
            yaw_rate: 0.0,
            ax: 0.0,
            ay: 0.0,
            s: t * vx,
            e_y,
            e_psi: 0.0,
            beta,
            vx_ref,
            rho: 0.0,
            cmd_delta_f: 0.0,
            cmd_delta_r: 0.0,
            cmd_fx_f: 0.0,
            cmd_p_b: 0.6,
            cmd_mz: 0.0,
            cmd_ddelta_f: 0.0,
            cmd_dfx_f: 0.0,
            cmd_dmz: 0.0,
            cmd_ddelta_r: 0.0,
            eps_mz: 0.0,
            mz_min: 0.0,
            mz_max: 0.0,
            mz_plant: 0.0,
            brake_fl: 0.0,
            brake_fr: 0.0,
            brake_rl: 0.0,
            brake_rr: 0.0,
            drive_front: 0.0,
            drive_rear: 0.0,
            slip_fl: 0.0,
            slip_fr: 0.0,
            slip_rl: 0.0,
            slip_rr: 0.0,
            saturated: false,
            solver_status: SolverStatus::Converged,
            sqp_iterations: 1,
            qp_iterations: 10,
            objective: 0.0,
            friction_violation: 0.0,
            vsc_steps: 0,
            abs_steps: 0,
        }
    }

    #[test]
    fn direct_formula() {
        let tr: Vec<_> = [0.0, 1.0, -2.0]
            .iter()
            .enumerate()
            .map(|(i, &e)| sample(i as f64 * 0.04, e, 0.0, 10.0, 10.0))
            .collect();
        let k = compute_kpis(&tr).unwrap();
        assert_eq!(k.ey_max_abs, 2.0);
        assert!((k.rms_ey - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(k.rms_evx, 0.0);
    }

    #[test]
    fn constant_sideslip() {
        let b = 10f64.to_radians();
        let tr: Vec<_> = (0..20).map(|i| sample(i as f64 * 0.04, 0.0, b, 10.0, 10.0)).collect();
        assert!((compute_kpis(&tr).unwrap().beta_max_abs - 10.0).abs() < 1e-12);
    }

    #[test]
    fn empty_trace() {
        assert!(matches!(compute_kpis(&[]), Err(Error::EmptyTrace)));
    }

    /// Welford-style streaming statistics, written independently.
    fn streaming(trace: &[TraceSample]) -> KpiReport {
        let mut mean_ey2 = 0.0;
        let mut mean_ev2 = 0.0;
        let mut max_ey = f64::NEG_INFINITY;
        let mut max_b = f64::NEG_INFINITY;
        for (k, s) in trace.iter().enumerate() {
            let w = 1.0 / (k + 1) as f64;
            mean_ey2 += (s.e_y.powi(2) - mean_ey2) * w;
            let ev = (s.vx - s.vx_ref) / (1000.0 / 3600.0);
            mean_ev2 += (ev.powi(2) - mean_ev2) * w;
            max_ey = max_ey.max(s.e_y.abs());
            max_b = max_b.max(s.beta.abs() * 180.0 / std::f64::consts::PI);
        }
        KpiReport {
            ey_max_abs: max_ey,
            rms_ey: mean_ey2.sqrt(),
            rms_evx: mean_ev2.sqrt(),
            beta_max_abs: max_b,
        }
    }

    fn arb_trace() -> impl Strategy<Value = Vec<TraceSample>> {
        prop::collection::vec((-5.0f64..5.0, -1.2f64..1.2, 3.0f64..14.0, 3.0f64..14.0), 1..300)
            .prop_map(|v| {
                v.into_iter()
                    .enumerate()
                    .map(|(i, (e, b, vx, vr))| sample(i as f64 * 0.04, e, b, vx, vr))
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn matches_streaming_oracle(tr in arb_trace()) {
            let a = compute_kpis(&tr).unwrap();
            let b = streaming(&tr);
            prop_assert_eq!(a.ey_max_abs, b.ey_max_abs);
            prop_assert!((a.beta_max_abs - b.beta_max_abs).abs() <= 1e-12 * b.beta_max_abs.max(1.0));
            prop_assert!((a.rms_ey - b.rms_ey).abs() <= 1e-9 * b.rms_ey.max(1e-3));
            prop_assert!((a.rms_evx - b.rms_evx).abs() <= 1e-9 * b.rms_evx.max(1e-3));
        }

        #[test]
        fn rms_bounded_by_max_and_reversal_invariant(tr in arb_trace()) {
            let a = compute_kpis(&tr).unwrap();
            prop_assert!(a.rms_ey <= a.ey_max_abs);
            prop_assert!(a.ey_max_abs >= 0.0 && a.rms_evx >= 0.0 && a.beta_max_abs >= 0.0);
            let mut rev = tr.clone();
            rev.reverse();
            let r = compute_kpis(&rev).unwrap();
            prop_assert_eq!(a.ey_max_abs, r.ey_max_abs);
            prop_assert_eq!(a.beta_max_abs, r.beta_max_abs);
        }
    }
}
