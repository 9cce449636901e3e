use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use nldtc::harness::config::{defaults_toml, MetricsConfig, ScenarioConfig};
use nldtc::harness::figures::{figure_suite, write_figure};
use nldtc::harness::trace::{read_trace_columns, write_trace};
use nldtc::harness::{compute_metrics, compute_metrics_from_series, run_scenario, Metrics};
use nldtc::Error;

#[derive(Parser)]
#[command(
    name = "nldtc",
    version,
    about = "Delayed path-tracking simulator with dead-time compensation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a figure suite (fig3, fig4, fig8, fig10, fig11, fig12).
    Figure {
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compute metrics of a trace file.
    Metrics { trace: PathBuf },
    /// Check a scenario file without running it.
    Validate { config: PathBuf },
    /// Print the built-in parameter values.
    Defaults,
}

fn print_metrics(m: &Metrics) {
    let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.4}"));
    println!("reach_time_s = {}", opt(m.reach_time_s));
    println!("rms_e_m = {:.6}", m.rms_e_m);
    println!("max_abs_e_m = {:.6}", m.max_abs_e_m);
    println!("settle_time_s = {}", opt(m.settle_time_s));
    println!("zero_crossings = {}", m.zero_crossings);
    println!("oscillation_sustained = {}", m.oscillation_sustained);
    println!("peak_osc_amplitude_m = {:.6}", m.peak_osc_amplitude_m);
    println!("mean_abs_delta_rate = {:.6}", m.mean_abs_delta_rate);
}

/// Metric thresholds from the config echo next to a trace, if present.
fn sidecar_metrics(trace: &Path) -> anyhow::Result<MetricsConfig> {
    let sidecar = trace.with_extension("config.toml");
    if !sidecar.exists() {
        return Ok(MetricsConfig::default());
    }
    let text = std::fs::read_to_string(&sidecar).with_context(|| format!("reading {}", sidecar.display()))?;
    Ok(ScenarioConfig::from_toml_str(&text)?.metrics)
}

fn execute(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = ScenarioConfig::read(&config)?;
            let stem = match cfg.name.as_str() {
                "" => config
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("trace")
                    .to_string(),
                name => name.to_string(),
            };
            let trace = run_scenario(&cfg)?;
            let file = write_trace(&trace, &out, &stem)?;
            println!("wrote {}", file.display());
            print_metrics(&compute_metrics(&trace)?);
        }
        Command::Figure { name, out } => {
            let result = figure_suite(&name)?;
            for file in write_figure(&result, &out)? {
                println!("wrote {}", file.display());
            }
            for run in &result.runs {
                println!(
                    "{:<32} rms_e_m = {:.4}  max_abs_e_m = {:.4}  sustained = {}",
                    run.label, run.metrics.rms_e_m, run.metrics.max_abs_e_m, run.metrics.oscillation_sustained
                );
            }
        }
        Command::Metrics { trace } => {
            let cols = read_trace_columns(&trace)?;
            let cfg = sidecar_metrics(&trace)?;
            print_metrics(&compute_metrics_from_series(&cols.t, &cols.e, &cols.delta_act, &cfg)?);
        }
        Command::Validate { config } => {
            ScenarioConfig::read(&config)?;
            println!("{}: ok", config.display());
        }
        Command::Defaults => print!("{}", defaults_toml()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(e) if e.is_validation() => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
