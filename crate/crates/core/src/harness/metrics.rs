//! Scalar summaries of a lateral-error trace.

use serde::{Deserialize, Serialize};

use super::config::MetricsConfig;
use super::sim::SimTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// First time |e| dropped below the reach threshold.
    pub reach_time_s: Option<f64>,
    /// RMS and maximum |e| from the reach time to the end of the trace, or
    /// over the whole trace if the path was never reached.
    pub rms_e_m: f64,
    pub max_abs_e_m: f64,
    /// Earliest time after which |e| stays below the settle threshold.
    pub settle_time_s: Option<f64>,
    /// Sign changes of e inside the oscillation window.
    pub zero_crossings: usize,
    pub oscillation_sustained: bool,
    /// Largest |e| after the first sign change, zero without one.
    pub peak_osc_amplitude_m: f64,
    pub mean_abs_delta_rate: f64,
}

/// Maximal stretches of one sign (ignoring |e| ≤ floor) and their peak |e|.
fn excursions(e: &[f64], floor: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let mut current: Option<(f64, usize, f64)> = None;
    for (i, &x) in e.iter().enumerate() {
        if x.abs() > floor {
            let sign = x.signum();
            match current {
                Some((s, start, peak)) if s == sign => current = Some((s, start, peak.max(x.abs()))),
                Some((_, start, peak)) => {
                    out.push((start, i, peak));
                    current = Some((sign, i, x.abs()));
                }
                None => current = Some((sign, i, x.abs())),
            }
        }
    }
    if let Some((_, start, peak)) = current {
        out.push((start, e.len(), peak));
    }
    out
}

pub fn compute_metrics(trace: &SimTrace) -> Result<Metrics> {
    compute_metrics_from_series(
        &trace.times(),
        &trace.errors(),
        &trace.steering(),
        &trace.config.metrics,
    )
}

/// Metrics from raw columns; all three slices must have the same length
/// and uniformly spaced times.
pub fn compute_metrics_from_series(t: &[f64], e: &[f64], delta: &[f64], cfg: &MetricsConfig) -> Result<Metrics> {
    if t.len() != e.len() || t.len() != delta.len() {
        return Err(Error::domain("metric series differ in length"));
    }
    if t.len() < 2 {
        return Err(Error::domain("metrics need at least two samples"));
    }
    if e.iter().chain(delta).any(|x| !x.is_finite()) {
        return Err(Error::domain("trace contains non-finite values"));
    }
    let dt = t[1] - t[0];

    let reach = e.iter().position(|x| x.abs() < cfg.reach_threshold_m);
    let tail = &e[reach.unwrap_or(0)..];
    let rms_e_m = (tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64).sqrt();
    let max_abs_e_m = tail.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let settle_time_s = match e.iter().rposition(|x| x.abs() >= cfg.eps_settle_m) {
        None => Some(t[0]),
        Some(last) if last + 1 < e.len() => Some(t[last + 1]),
        Some(_) => None,
    };

    let start = reach.unwrap_or(0);
    let window_end = t.iter().position(|&x| x > t[start] + cfg.window_s).unwrap_or(t.len());
    let exc = excursions(&e[start..window_end], cfg.osc_floor_m);
    let zero_crossings = exc.len().saturating_sub(1);
    // Excursions after the first sign change; the last one may be cut off by
    // the window edge and is left out of the decay comparison.
    let overshoots: Vec<f64> = exc.iter().skip(1).map(|x| x.2).collect();
    let peak_osc_amplitude_m = overshoots.iter().fold(0.0_f64, |m, &x| m.max(x));
    let complete = &overshoots[..overshoots.len().saturating_sub(1)];
    let oscillation_sustained = zero_crossings >= 5
        && match (complete.first(), complete.last()) {
            (Some(first), Some(last)) => *last >= 0.5 * first,
            _ => false,
        };

    let mean_abs_delta_rate =
        delta.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (dt * (delta.len() - 1) as f64);

    Ok(Metrics {
        reach_time_s: reach.map(|i| t[i]),
        rms_e_m,
        max_abs_e_m,
        settle_time_s,
        zero_crossings,
        oscillation_sustained,
        peak_osc_amplitude_m,
        mean_abs_delta_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, n: usize, dt: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let e = t.iter().map(|&x| f(x)).collect();
        (t, e)
    }

    #[test]
    fn decaying_response_settles() {
        let (t, e) = series(|x| -(-x).exp(), 2001, 0.01);
        let d = vec![0.0; t.len()];
        let m = compute_metrics_from_series(&t, &e, &d, &MetricsConfig::default()).unwrap();
        assert!((m.reach_time_s.unwrap() - 0.7).abs() < 0.011);
        let expected = -(0.05_f64).ln();
        assert!((m.settle_time_s.unwrap() - expected).abs() < 0.011);
        assert_eq!(m.zero_crossings, 0);
        assert!(!m.oscillation_sustained);
        assert_eq!(m.peak_osc_amplitude_m, 0.0);
    }

    #[test]
    fn limit_cycle_is_sustained() {
        let (t, e) = series(
            |x| 0.3 * (x * 1.3).sin() - if x < 1.0 { 1.0 - x } else { 0.0 },
            4001,
            0.01,
        );
        let d = vec![0.0; t.len()];
        let m = compute_metrics_from_series(&t, &e, &d, &MetricsConfig::default()).unwrap();
        assert!(m.oscillation_sustained);
        assert!(m.zero_crossings >= 10);
        assert!((m.peak_osc_amplitude_m - 0.3).abs() < 1e-3);
        assert!(m.settle_time_s.is_none());
    }

    #[test]
    fn damped_oscillation_is_not_sustained() {
        let (t, e) = series(|x| (-0.5 * x).exp() * (3.0 * x).cos(), 4001, 0.01);
        let d = vec![0.0; t.len()];
        let m = compute_metrics_from_series(&t, &e, &d, &MetricsConfig::default()).unwrap();
        assert!(m.zero_crossings >= 5);
        assert!(!m.oscillation_sustained);
    }

    #[test]
    fn hysteresis_ignores_chatter() {
        let (t, e) = series(|x| 0.001 * (50.0 * x).sin(), 1001, 0.01);
        let d = vec![0.0; t.len()];
        let m = compute_metrics_from_series(&t, &e, &d, &MetricsConfig::default()).unwrap();
        assert_eq!(m.zero_crossings, 0);
    }

    #[test]
    fn delta_rate() {
        let (t, d) = series(|x| 0.1 * x, 101, 0.01);
        let e = vec![0.0; t.len()];
        let m = compute_metrics_from_series(&t, &e, &d, &MetricsConfig::default()).unwrap();
        assert!((m.mean_abs_delta_rate - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = MetricsConfig::default();
        assert!(compute_metrics_from_series(&[0.0, 0.1], &[0.0], &[0.0, 0.0], &cfg).is_err());
        assert!(compute_metrics_from_series(&[0.0, 0.1], &[0.0, f64::NAN], &[0.0, 0.0], &cfg).is_err());
    }
}
