//! Manoeuvres, the closed-loop simulation, KPIs and trace files.

mod export;
mod kpi;
mod path;
mod project;
mod sim;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use export::{
    export_trace, gnuplot_script, ExportedFiles, read_kpi_json, read_trace_csv, write_kpi_json, write_trace_csv,
    KpiSummary, TRACE_COLUMNS, TRACE_SCHEMA,
};
pub use kpi::{compute_kpis, KpiReport};
pub use path::{build_path, speed_profile, PathRef, Scenario, SpeedProfile};
pub use project::{project_to_path, Projection};
pub use sim::{run_closed_loop, RunOutcome, RunResult, TraceSample};
pub use sweep::{run_sweep, SweepEntry, SweepMatrix, SweepResult, MATRIX_SCHEMA};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Tyre-road friction of the plant, also known to the controller.
    pub mu: f64,
    pub v0_m_s: f64,
    pub entry_straight_m: f64,
    pub clothoid_m: f64,
    pub exit_straight_m: f64,
    /// Arc radius; when absent it follows from `lateral_accel_factor`.
    pub radius_m: Option<f64>,
    /// Entry-speed lateral acceleration on the arc as a multiple of `mu g`.
    pub lateral_accel_factor: f64,
    pub gravity_m_s2: f64,
    pub corner_speed_m_s: f64,
    pub decel_m_s2: f64,
    pub brake_start_m: f64,
    pub grid_step_m: f64,
    pub corridor_m: f64,
    /// Half-width of the arclength window searched around the previous
    /// projection.
    pub projection_window_m: f64,
    pub timeout_s: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("scenario: {m}")));
        if !(self.mu > 0.0 && self.gravity_m_s2 > 0.0) {
            return bad("mu and gravity must be > 0");
        }
        if !(self.v0_m_s > 0.0 && self.corner_speed_m_s > 0.0 && self.decel_m_s2 >= 0.0) {
            return bad("speeds must be > 0 and deceleration >= 0");
        }
        if !(self.entry_straight_m >= 0.0 && self.clothoid_m >= 0.0 && self.exit_straight_m >= 0.0)
        {
            return bad("segment lengths must be >= 0");
        }
        if let Some(r) = self.radius_m {
            if !(r > 0.0) {
                return bad("radius_m must be > 0");
            }
        } else if !(self.lateral_accel_factor > 0.0) {
            return bad("lateral_accel_factor must be > 0");
        }
        if !(self.grid_step_m > 0.0 && self.corridor_m > 0.0 && self.projection_window_m > 0.0) {
            return bad("grid step, corridor and projection window must be > 0");
        }
        if !(self.timeout_s > 0.0) {
            return bad("timeout_s must be > 0");
        }
        Ok(())
    }

    pub fn arc_radius(&self) -> f64 {
        self.radius_m.unwrap_or_else(|| {
            self.v0_m_s * self.v0_m_s / (self.lateral_accel_factor * self.mu * self.gravity_m_s2)
        })
    }
}
