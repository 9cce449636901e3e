//! CSV traces and their config sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::ScenarioConfig;
use super::metrics::Metrics;
use super::sim::SimTrace;
use crate::error::{Error, Result};

pub const TRACE_COLUMNS: [&str; 12] = [
    "t_s",
    "x_m",
    "y_m",
    "psi_rad",
    "v_mps",
    "e_m",
    "s_star_m",
    "delta_cmd_rad",
    "delta_act_rad",
    "yhat_x_m",
    "yhat_y_m",
    "yhat_psi_rad",
];

/// Nine significant digits, shortest of fixed or exponent notation.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes `<stem>.csv` and the config echo `<stem>.config.toml` into `dir`.
pub fn write_trace(trace: &SimTrace, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
    for r in &trace.rows {
        let values = [
            r.t,
            r.state.p.x,
            r.state.p.y,
            r.state.psi,
            r.v,
            r.e,
            r.s_star,
            r.delta_cmd,
            r.delta_act,
            r.y_hat.p.x,
            r.y_hat.p.y,
            r.y_hat.psi,
        ];
        w.write_record(values.iter().map(|&v| format_number(v)))
            .map_err(csv_err)?;
    }
    w.flush()?;
    write_config_echo(&trace.config, &dir.join(format!("{stem}.config.toml")))?;
    Ok(csv_path)
}

/// Writes the config as parsed, including defaults, with a version header.
pub fn write_config_echo(cfg: &ScenarioConfig, path: &Path) -> Result<()> {
    let body = cfg.to_toml_string()?;
    let text = format!("# nldtc {}\n{body}", env!("CARGO_PKG_VERSION"));
    fs::write(path, text)?;
    Ok(())
}

/// The columns of a trace file that the metrics need.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceColumns {
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub delta_act: Vec<f64>,
}

pub fn read_trace_columns(path: &Path) -> Result<TraceColumns> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column {name}", path.display())))
    };
    let (it, ie, id) = (column("t_s")?, column("e_m")?, column("delta_act_rad")?);
    let mut out = TraceColumns::default();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("{}: bad number on data row {}", path.display(), line + 1)))
        };
        out.t.push(field(it)?);
        out.e.push(field(ie)?);
        out.delta_act.push(field(id)?);
    }
    Ok(out)
}

/// One row per labelled run.
pub fn write_metrics_table(rows: &[(String, Metrics)], path: &Path) -> Result<()> {
    let opt = |x: Option<f64>| x.map(format_number).unwrap_or_default();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "run",
        "reach_time_s",
        "rms_e_m",
        "max_abs_e_m",
        "settle_time_s",
        "zero_crossings",
        "oscillation_sustained",
        "peak_osc_amplitude_m",
        "mean_abs_delta_rate",
    ])
    .map_err(csv_err)?;
    for (label, m) in rows {
        w.write_record([
            label.clone(),
            opt(m.reach_time_s),
            format_number(m.rms_e_m),
            format_number(m.max_abs_e_m),
            opt(m.settle_time_s),
            m.zero_crossings.to_string(),
            m.oscillation_sustained.to_string(),
            format_number(m.peak_osc_amplitude_m),
            format_number(m.mean_abs_delta_rate),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
