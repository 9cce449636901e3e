//! Canned multi-run suites built from the shipped scenario files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{CompensatorSection, ControllerConfig, DelayConfig, PlantConfig, ScenarioConfig, SpeedProfile};
use super::metrics::{compute_metrics, Metrics};
use super::sim::{run_scenario, SimTrace};
use super::trace::{format_number, write_metrics_table, write_trace};
use crate::error::{Error, Result};

pub const FIGURES: [&str; 6] = ["fig3", "fig4", "fig8", "fig10", "fig11", "fig12"];

/// Shipped scenario files by name.
pub const BUILTIN_CONFIGS: [(&str, &str); 8] = [
    ("fig3_stanley", include_str!("../../configs/fig3_stanley.toml")),
    (
        "fig3_pure_pursuit",
        include_str!("../../configs/fig3_pure_pursuit.toml"),
    ),
    ("fig3_dubins", include_str!("../../configs/fig3_dubins.toml")),
    ("fig8", include_str!("../../configs/fig8.toml")),
    ("fig10", include_str!("../../configs/fig10.toml")),
    ("fig11_stanley", include_str!("../../configs/fig11_stanley.toml")),
    ("fig11_dubins", include_str!("../../configs/fig11_dubins.toml")),
    ("fig12", include_str!("../../configs/fig12.toml")),
];

/// Compensator assumptions swept on the kinetic course.
pub const DT_HAT_SWEEP: [f64; 3] = [0.2, 0.4, 0.5];

/// Stanley gains compared under dead time.
pub const STANLEY_GAINS: [f64; 3] = [1.0, 2.0, 3.0];

pub fn builtin_config(name: &str) -> Result<ScenarioConfig> {
    let text = BUILTIN_CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::config("config", format!("no built-in scenario named {name:?}")))?;
    ScenarioConfig::from_toml_str(text)
}

#[derive(Debug, Clone)]
pub struct FigureRun {
    pub label: String,
    pub trace: SimTrace,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub name: String,
    pub runs: Vec<FigureRun>,
    /// Label of the run whose predictor model path is exported, if any.
    pub predictor_path_of: Option<String>,
}

impl FigureOutput {
    pub fn run(&self, label: &str) -> Option<&FigureRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

fn no_delays(cfg: &mut ScenarioConfig) {
    cfg.delays = DelayConfig::default();
    cfg.compensator.enabled = false;
    if let PlantConfig::Kinetic(k) = &mut cfg.plant {
        k.steering_filter = false;
    }
}

fn with_dt_hat(cfg: &ScenarioConfig, dt_hat: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.compensator = CompensatorSection {
        enabled: true,
        dt_hat_s: dt_hat,
        ..c.compensator
    };
    c
}

/// The kinetic-course matrix: no dead time, uncompensated, and one run per
/// compensator assumption.
fn compensation_matrix(prefix: &str, base: &ScenarioConfig) -> Vec<(String, ScenarioConfig)> {
    let mut ideal = base.clone();
    no_delays(&mut ideal);
    let mut uncompensated = base.clone();
    uncompensated.compensator.enabled = false;
    let mut runs = vec![
        (format!("{prefix}_no_dead_time"), ideal),
        (format!("{prefix}_uncompensated"), uncompensated),
    ];
    for h in DT_HAT_SWEEP {
        runs.push((format!("{prefix}_dt_hat_{h}"), with_dt_hat(base, h)));
    }
    runs
}

/// Labelled scenarios of a figure suite.
pub fn figure_scenarios(name: &str) -> Result<Vec<(String, ScenarioConfig)>> {
    let mut runs = Vec::new();
    match name {
        "fig3" => {
            for c in ["stanley", "pure_pursuit", "dubins"] {
                let base = builtin_config(&format!("fig3_{c}"))?;
                let mut ideal = base.clone();
                no_delays(&mut ideal);
                runs.push((format!("{c}_no_dead_time"), ideal));
                runs.push((format!("{c}_dead_time"), base));
            }
        }
        "fig4" => {
            let base = builtin_config("fig3_stanley")?;
            for k in STANLEY_GAINS {
                let mut c = base.clone();
                c.controller = ControllerConfig::Stanley { gain_k: k };
                runs.push((format!("stanley_k_{k}"), c));
            }
        }
        "fig8" => {
            let base = builtin_config("fig8")?;
            let mut ideal = base.clone();
            no_delays(&mut ideal);
            runs.push(("no_dead_time".to_string(), ideal));
            runs.push(("dead_time_compensated".to_string(), base));
        }
        "fig10" => runs = compensation_matrix("pure_pursuit", &builtin_config("fig10")?),
        "fig11" => {
            runs = compensation_matrix("stanley", &builtin_config("fig11_stanley")?);
            runs.extend(compensation_matrix("dubins", &builtin_config("fig11_dubins")?));
        }
        "fig12" => {
            let base = builtin_config("fig12")?;
            let matched_ramp = CompensatorSection {
                wheelbase_hat_m: None,
                ..base.compensator
            };
            let mut reference = base.clone();
            reference.compensator = matched_ramp;
            reference.speed = SpeedProfile::Constant { v_mps: 11.1 };
            let mut ramp = base.clone();
            ramp.compensator = matched_ramp;
            runs.push(("matched_constant_speed".to_string(), reference));
            runs.push(("matched_ramp".to_string(), ramp));
            runs.push(("wheelbase_0.9_ramp".to_string(), base));
        }
        other => {
            return Err(Error::config(
                "figure",
                format!("unknown figure {other:?}; expected one of {}", FIGURES.join(", ")),
            ))
        }
    }
    Ok(runs)
}

/// Runs every scenario of a suite (in parallel) and computes its metrics.
pub fn figure_suite(name: &str) -> Result<FigureOutput> {
    let scenarios = figure_scenarios(name)?;
    let runs = scenarios
        .into_par_iter()
        .map(|(label, cfg)| {
            let trace = run_scenario(&cfg)?;
            let metrics = compute_metrics(&trace)?;
            Ok(FigureRun { label, trace, metrics })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureOutput {
        name: name.to_string(),
        runs,
        predictor_path_of: (name == "fig8").then(|| "dead_time_compensated".to_string()),
    })
}

/// Writes one trace per run, the predictor path where applicable and
/// `<name>_metrics.csv`. Returns the trace files written.
pub fn write_figure(out: &FigureOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for run in &out.runs {
        files.push(write_trace(&run.trace, dir, &format!("{}_{}", out.name, run.label))?);
    }
    if let Some(label) = &out.predictor_path_of {
        let run = out
            .run(label)
            .ok_or_else(|| Error::domain(format!("no run labelled {label}")))?;
        let path = dir.join(format!("{}_predictor_path.csv", out.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(["t_s", "x_m", "y_m", "psi_rad"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for r in &run.trace.rows {
            let m = r.model_pose;
            w.write_record([r.t, m.p.x, m.p.y, m.psi].map(format_number))
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        files.push(path);
    }
    let table: Vec<(String, Metrics)> = out.runs.iter().map(|r| (r.label.clone(), r.metrics)).collect();
    write_metrics_table(&table, &dir.join(format!("{}_metrics.csv", out.name)))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_configs_validate_and_round_trip() {
        for (name, _) in BUILTIN_CONFIGS {
            let cfg = builtin_config(name).unwrap();
            cfg.prepare().unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(cfg, again, "{name}");
        }
    }

    #[test]
    fn run_counts() {
        let counts: Vec<usize> = FIGURES.iter().map(|f| figure_scenarios(f).unwrap().len()).collect();
        assert_eq!(counts, [6, 3, 2, 5, 10, 3]);
    }

    #[test]
    fn unknown_figure() {
        assert!(figure_scenarios("fig99").is_err());
    }
}
