use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{compute_kpis, KpiReport, RunOutcome, RunResult, Scenario, TraceSample};
use crate::variant::Variant;

pub const TRACE_SCHEMA: &str = "drift-nmpc/trace/v1";
pub const KPI_SCHEMA: &str = "drift-nmpc/kpi/v1";

/// Trace CSV header, in order. SI units except where the name says otherwise.
pub const TRACE_COLUMNS: [&str; 46] = [
    "t",
    "x",
    "y",
    "psi",
    "vx",
    "vy",
    "yaw_rate",
    "ax",
    "ay",
    "s",
    "e_y",
    "e_psi",
    "beta",
    "vx_ref",
    "rho",
    "cmd_delta_f",
    "cmd_delta_r",
    "cmd_fx_f",
    "cmd_p_b",
    "cmd_mz",
    "cmd_ddelta_f",
    "cmd_dfx_f",
    "cmd_dmz",
    "cmd_ddelta_r",
    "eps_mz",
    "mz_min",
    "mz_max",
    "mz_plant",
    "brake_fl",
    "brake_fr",
    "brake_rl",
    "brake_rr",
    "drive_front",
    "drive_rear",
    "slip_fl",
    "slip_fr",
    "slip_rl",
    "slip_rr",
    "saturated",
    "solver_status",
    "sqp_iterations",
    "qp_iterations",
    "objective",
    "friction_violation",
    "vsc_steps",
    "abs_steps",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub schema: String,
    pub scenario: Scenario,
    pub variant: Variant,
    pub delta_r_max_deg: f64,
    pub outcome: RunOutcome,
    pub samples: usize,
    pub kpis: Option<KpiReport>,
}

impl KpiSummary {
    pub fn of(run: &RunResult) -> Self {
        Self {
            schema: KPI_SCHEMA.into(),
            scenario: run.scenario,
            variant: run.variant,
            delta_r_max_deg: run.delta_r_max_deg,
            outcome: run.outcome.clone(),
            samples: run.trace.len(),
            kpis: compute_kpis(&run.trace).ok(),
        }
    }
}

pub fn write_trace_csv(trace: &[TraceSample], path: &Path) -> Result<()> {
    let csv_err = |e| Error::Csv {
        path: path.into(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if trace.is_empty() {
        w.write_record(&TRACE_COLUMNS[..])
            .map_err(csv_err)?;
    }
    for s in trace {
        w.serialize(s).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceSample>> {
    let csv_err = |e| Error::Csv {
        path: path.into(),
        source: e,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    let expected = &TRACE_COLUMNS[..];
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Config(format!(
            "{}: header does not match the {TRACE_SCHEMA} columns",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn write_kpi_json(summary: &KpiSummary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_kpi_json(path: &Path) -> Result<KpiSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

/// Gnuplot script plotting the trajectory and the main channels of a trace.
pub fn gnuplot_script(csv_name: &str, title: &str) -> String {
    let col = |name: &str| TRACE_COLUMNS.iter().position(|c| *c == name).unwrap() + 1;
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 1200,900\n\
         set output '{stem}_xy.png'\n\
         set title '{title}: trajectory'\n\
         set size ratio -1\n\
         plot '{csv}' using {x}:{y} with lines title 'vehicle'\n\
         set size noratio\n\
         set output '{stem}_channels.png'\n\
         set multiplot layout 4,1 title '{title}'\n\
         plot '{csv}' using {t}:{ey} with lines title 'e_y [m]'\n\
         plot '{csv}' using {t}:(${beta}*180/pi) with lines title 'beta [deg]'\n\
         plot '{csv}' using {t}:{vx} with lines title 'vx', '' using {t}:{vref} with lines title 'vx_ref'\n\
         plot '{csv}' using {t}:{mz} with lines title 'Mz NMPC', '' using {t}:{mzp} with lines title 'Mz plant'\n\
         unset multiplot\n",
        stem = csv_name.trim_end_matches(".csv"),
        csv = csv_name,
        title = title,
        x = col("x"),
        y = col("y"),
        t = col("t"),
        ey = col("e_y"),
        beta = col("beta"),
        vx = col("vx"),
        vref = col("vx_ref"),
        mz = col("cmd_mz"),
        mzp = col("mz_plant"),
    )
}

/// Files written for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExportedFiles {
    pub trace: PathBuf,
    pub kpi: PathBuf,
    pub gnuplot: Option<PathBuf>,
}

pub(crate) fn run_stem(run: &RunResult) -> String {
    if run.variant.has_rear_steer() {
        format!(
            "{}_{}_dr{}",
            run.scenario,
            run.variant,
            run.delta_r_max_deg.round() as i64
        )
    } else {
        format!("{}_{}", run.scenario, run.variant)
    }
}

/// Trace CSV, KPI JSON and optionally a gnuplot script into `dir`.
pub fn export_trace(run: &RunResult, dir: &Path, gnuplot: bool) -> Result<ExportedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = run_stem(run);
    let trace = dir.join(format!("{stem}.csv"));
    let kpi = dir.join(format!("{stem}_kpi.json"));
    write_trace_csv(&run.trace, &trace)?;
    write_kpi_json(&KpiSummary::of(run), &kpi)?;
    let gp = if gnuplot {
        let p = dir.join(format!("{stem}.gp"));
        fs::write(&p, gnuplot_script(&format!("{stem}.csv"), &stem)).map_err(|e| Error::io(&p, e))?;
        Some(p)
    } else {
        None
    };
    Ok(ExportedFiles {
        trace,
        kpi,
        gnuplot: gp,
    })
}
