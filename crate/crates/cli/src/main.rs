use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use drift_nmpc::scenario::{
    compute_kpis, export_trace, read_trace_csv, run_closed_loop, run_sweep, KpiSummary, Scenario,
    SweepMatrix,
};
use drift_nmpc::{Config, Execution, Variant};

#[derive(Parser)]
#[command(name = "drift-nmpc", version, about = "Closed-loop drifting NMPC scenario harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one manoeuvre with one controller variant.
    Run {
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        /// Configuration JSON; the bundled defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Rear steering limit [deg].
        #[arg(long)]
        delta_r_max: Option<f64>,
        /// Directory for the trace CSV, KPI JSON and gnuplot script.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the configured noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a matrix of scenarios and variants.
    Sweep {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the entries one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Recompute the KPIs of a trace CSV.
    Kpi { trace: PathBuf },
    /// Print the bundled default configuration.
    DefaultConfig,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: drift_nmpc::Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: drift_nmpc::Error| e.to_string())
}

fn load_config(path: Option<&PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run {
            variant,
            scenario,
            config,
            delta_r_max,
            out,
            seed,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(d) = delta_r_max {
                cfg = cfg.with_delta_r_max_deg(d);
            }
            let seed = seed.unwrap_or(cfg.scenario.seed);
            let result = run_closed_loop(variant, scenario, &cfg, seed)?;
            if let Some(dir) = out {
                let files = export_trace(&result, &dir, true)?;
                eprintln!("wrote {}", files.trace.display());
            }
            print_json(&KpiSummary::of(&result))?;
            Ok(result.outcome.exit_code() as u8)
        }
        Command::Sweep {
            matrix,
            config,
            out,
            sequential,
        } => {
            let cfg = load_config(config.as_ref())?;
            let m = SweepMatrix::load(&matrix)?;
            let mode = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let res = run_sweep(&m, &cfg, out.as_deref(), mode)?;
            print_json(&res.summaries)?;
            let worst = res
                .runs
                .iter()
                .map(|r| r.outcome.exit_code())
                .max()
                .unwrap_or(0);
            Ok(worst as u8)
        }
        Command::Kpi { trace } => {
            let t = read_trace_csv(&trace)?;
            print_json(&compute_kpis(&t)?)?;
            Ok(0)
        }
        Command::DefaultConfig => {
            println!("{}", Config::default().to_json());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 and 3 are run outcomes.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
