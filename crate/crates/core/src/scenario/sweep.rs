//! Grid of scenario runs, one isolated controller and plant per entry.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::scenario::export::{export_trace, KpiSummary};
use crate::scenario::{run_closed_loop, RunResult, Scenario};
use crate::variant::Variant;

pub const MATRIX_SCHEMA: &str = "drift-nmpc/sweep/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub scenario: Scenario,
    pub variant: Variant,
    /// Rear steering limit for this entry; the configured one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_r_max_deg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMatrix {
    pub schema: String,
    pub seed: u64,
    pub runs: Vec<SweepEntry>,
}

impl SweepMatrix {
    /// Both manoeuvres with the yaw-moment controller and the rear-steer
    /// controller at 5, 10 and 15 deg.
    pub fn table() -> Self {
        let mut runs = Vec::new();
        for scenario in Scenario::ALL {
            runs.push(SweepEntry {
                scenario,
                variant: Variant::Mz,
                delta_r_max_deg: None,
            });
            for d in [5.0, 10.0, 15.0] {
                runs.push(SweepEntry {
                    scenario,
                    variant: Variant::MzDr,
                    delta_r_max_deg: Some(d),
                });
            }
        }
        Self {
            schema: MATRIX_SCHEMA.into(),
            seed: 42,
            runs,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: SweepMatrix = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        if m.schema != MATRIX_SCHEMA {
            return Err(Error::Config(format!(
                "{}: schema `{}` is not `{MATRIX_SCHEMA}`",
                path.display(),
                m.schema
            )));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub runs: Vec<RunResult>,
    pub summaries: Vec<KpiSummary>,
}

/// Run every entry; with `out` set, each run's trace and KPI files plus a
/// combined `sweep_kpi.json` are written there.
pub fn run_sweep(
    matrix: &SweepMatrix,
    config: &Config,
    out: Option<&Path>,
    mode: Execution,
) -> Result<SweepResult> {
    let results = par::map(&matrix.runs, mode, |e| {
        let cfg = match e.delta_r_max_deg {
            Some(d) => config.with_delta_r_max_deg(d),
            None => config.clone(),
        };
        run_closed_loop(e.variant, e.scenario, &cfg, matrix.seed)
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summaries: Vec<KpiSummary> = runs.iter().map(KpiSummary::of).collect();
    if let Some(dir) = out {
        for r in &runs {
            export_trace(r, dir, false)?;
        }
        let p = dir.join("sweep_kpi.json");
        let text = serde_json::to_string_pretty(&summaries).map_err(|e| Error::Json {
            path: p.clone(),
            source: e,
        })?;
        fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))?;
    }
    Ok(SweepResult { runs, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_eight_runs() {
        let m = SweepMatrix::table();
        assert_eq!(m.runs.len(), 8);
        let text = serde_json::to_string(&m).unwrap();
        let back: SweepMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bundled_matrix_is_the_table() {
        let text = include_str!("../../config/table1_sweep.json");
        let m: SweepMatrix = serde_json::from_str(text).unwrap();
        assert_eq!(m, SweepMatrix::table());
    }
}
