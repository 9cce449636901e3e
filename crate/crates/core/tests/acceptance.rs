//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nldtc::compensator::{Compensator, CompensatorConfig, PredictorQueue};
use nldtc::delay::DelayLine;
use nldtc::geometry::{wrap_to_pi, Vec2};
use nldtc::harness::config::ScenarioConfig;
use nldtc::harness::figures::{builtin_config, figure_suite, FigureOutput};
use nldtc::harness::trace::write_trace;
use nldtc::harness::{run_scenario, SimTrace};
use nldtc::vehicle_models::{kinematic_step, KinematicParams, VehicleState};

const EXACT_PREDICTION_TOL: f64 = 1e-9;
const TIME_SHIFT_TOL: f64 = 1e-6;
const EXACTNESS_BUDGET: Duration = Duration::from_secs(1);
const FIG3_BUDGET: Duration = Duration::from_secs(5);
const FIG10_11_HAT_OVER_TOL: f64 = 2.0;
const FIG12_MAX_E: f64 = 2.0;
const FIG12_RMS_RATIO: f64 = 1.5;
const BIBO_STEPS: usize = 1_000_000;
const BIBO_SLACK: f64 = 1e-9;
const RK4_DRAWS: usize = 1000;
const RK4_SUBSTEPS: usize = 1000;
const RK4_TOL: f64 = 1e-8;
const RELOCATION_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn no_dead_time(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.delays = Default::default();
    c.compensator.enabled = false;
    c
}

/// Largest pose deviation between `shifted[j + k]` moved back by `offset`
/// and `reference[j]`, over every `j` both traces cover.
fn shifted_deviation(reference: &SimTrace, shifted: &SimTrace, k: usize, offset: Vec2) -> (f64, f64) {
    let mut dp = 0.0_f64;
    let mut dpsi = 0.0_f64;
    for (r, s) in reference.rows.iter().zip(&shifted.rows[k..]) {
        dp = dp.max((s.state.p - offset).distance(r.state.p));
        dpsi = dpsi.max(wrap_to_pi(s.state.psi - r.state.psi).abs());
    }
    (dp, dpsi)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = builtin_config("fig8").unwrap();
    let k = (cfg.delays.input_s / cfg.dt_s).round() as usize;
    let compensated = run_scenario(&cfg).unwrap();
    let ideal = run_scenario(&no_dead_time(&cfg)).unwrap();

    let n = compensated.rows.len();
    let mut pred_p = 0.0_f64;
    let mut pred_psi = 0.0_f64;
    for i in k..n - k {
        let predicted = compensated.rows[i].y_hat;
        let truth = compensated.rows[i + k].state;
        pred_p = pred_p.max(predicted.p.distance(truth.p));
        pred_psi = pred_psi.max(wrap_to_pi(predicted.psi - truth.psi).abs());
    }

    let v = cfg.speed.at(0.0);
    let offset = Vec2::from_heading(cfg.initial_pose.psi_rad) * (v * cfg.delays.input_s);
    let (shift_p, shift_psi) = shifted_deviation(&ideal, &compensated, k, offset);
    let reached = ideal.rows.last().unwrap().e.abs() < 0.05;
    let elapsed = start.elapsed();

    let pass = pred_p <= EXACT_PREDICTION_TOL
        && pred_psi <= EXACT_PREDICTION_TOL
        && shift_p <= TIME_SHIFT_TOL
        && shift_psi <= TIME_SHIFT_TOL
        && reached
        && elapsed < EXACTNESS_BUDGET;
    outcome(
        pass,
        format!(
            "prediction err {pred_p:.2e} m / {pred_psi:.2e} rad; time-shifted path err {shift_p:.2e} m / {shift_psi:.2e} rad; {elapsed:.2?}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let out = figure_suite("fig3").unwrap();
    let elapsed = start.elapsed();
    let mut pass = elapsed < FIG3_BUDGET;
    let mut notes = Vec::new();
    for c in ["stanley", "pure_pursuit", "dubins"] {
        let ideal = &out.run(&format!("{c}_no_dead_time")).unwrap().metrics;
        let delayed = &out.run(&format!("{c}_dead_time")).unwrap().metrics;
        let eps = out
            .run(&format!("{c}_no_dead_time"))
            .unwrap()
            .trace
            .config
            .metrics
            .eps_settle_m;
        let settled = ideal.settle_time_s.is_some() && ideal.max_abs_e_m.is_finite();
        let final_ok = out
            .run(&format!("{c}_no_dead_time"))
            .unwrap()
            .trace
            .rows
            .last()
            .unwrap()
            .e
            .abs()
            < eps;
        let ok_ideal = settled && final_ok && !ideal.oscillation_sustained;
        let ok_delayed = delayed.oscillation_sustained;
        pass &= ok_ideal && ok_delayed;
        notes.push(format!(
            "{c}: settle {} / sustained {} ({} crossings)",
            if ok_ideal { "ok" } else { "NO" },
            if ok_delayed { "yes" } else { "NO" },
            delayed.zero_crossings
        ));
    }
    outcome(pass, format!("{}; {elapsed:.2?}", notes.join("; ")))
}

fn criterion_3() -> Outcome {
    let out = figure_suite("fig4").unwrap();
    let peaks: Vec<f64> = ["stanley_k_1", "stanley_k_2", "stanley_k_3"]
        .iter()
        .map(|l| out.run(l).unwrap().metrics.peak_osc_amplitude_m)
        .collect();
    let pass = peaks.windows(2).all(|w| w[1] > w[0]);
    outcome(pass, format!("peak amplitude for k = 1, 2, 3: {peaks:.4?} m"))
}

fn ordering(out: &FigureOutput, prefix: &str) -> (bool, String) {
    let rms = |s: &str| out.run(&format!("{prefix}_{s}")).unwrap().metrics.rms_e_m;
    let (un, h2, h4, h5) = (
        rms("uncompensated"),
        rms("dt_hat_0.2"),
        rms("dt_hat_0.4"),
        rms("dt_hat_0.5"),
    );
    let ok = un > h2 && h2 > h4 && h5 <= FIG10_11_HAT_OVER_TOL * h4 && h5 < un;
    (
        ok,
        format!("{prefix}: none {un:.3} / 0.2 s {h2:.3} / 0.4 s {h4:.3} / 0.5 s {h5:.3}"),
    )
}

fn criterion_4() -> Outcome {
    let fig10 = figure_suite("fig10").unwrap();
    let fig11 = figure_suite("fig11").unwrap();
    let results = [
        ordering(&fig10, "pure_pursuit"),
        ordering(&fig11, "stanley"),
        ordering(&fig11, "dubins"),
    ];
    let pass = results.iter().all(|r| r.0);
    let detail: Vec<String> = results.into_iter().map(|r| r.1).collect();
    outcome(pass, format!("rms_e [m] {}", detail.join("; ")))
}

fn criterion_5() -> Outcome {
    let out = figure_suite("fig12").unwrap();
    let reference = out.run("matched_constant_speed").unwrap().metrics;
    let matched_ramp = out.run("matched_ramp").unwrap().metrics;
    let perturbed = out.run("wheelbase_0.9_ramp").unwrap().metrics;
    let ratio = perturbed.rms_e_m / reference.rms_e_m;
    let pass = perturbed.max_abs_e_m < FIG12_MAX_E && ratio <= FIG12_RMS_RATIO;
    outcome(
        pass,
        format!(
            "max|e| {:.3} m; rms {:.3} m vs constant-speed matched {:.3} m (ratio {ratio:.3}); matched with ramp {:.3} m",
            perturbed.max_abs_e_m, perturbed.rms_e_m, reference.rms_e_m, matched_ramp.rms_e_m
        ),
    )
}

fn criterion_6() -> Outcome {
    let (k, dt, wheelbase, delta_bar, v_max) = (40, 0.01, 2.7, (2.7_f64 / 3.8).atan(), 15.0);
    let bound = v_max * k as f64 * dt + BIBO_SLACK;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut q = PredictorQueue::new(k, 0.0, wheelbase).unwrap();
    let mut worst = 0.0_f64;
    let mut oldest_exact = true;
    for _ in 0..BIBO_STEPS {
        let delta = rng.gen_range(-delta_bar..=delta_bar);
        let v = rng.gen_range(0.0..=v_max);
        q.step(delta, v, dt);
        let mut positions = q.shifted_positions();
        let oldest = positions.next().unwrap();
        oldest_exact &= oldest.x == 0.0 && oldest.y == 0.0;
        for p in positions {
            worst = worst.max(p.norm());
        }
    }
    let pass = oldest_exact && worst <= bound;
    outcome(
        pass,
        format!("{BIBO_STEPS} steps, max |p| {worst:.4} m <= {bound:.4} m, oldest entry exactly zero: {oldest_exact}"),
    )
}

/// Classical RK4 on the continuous kinematic single-track equations.
fn rk4_reference(state: VehicleState, delta: f64, v: f64, dt: f64, wheelbase: f64, substeps: usize) -> VehicleState {
    let f = |psi: f64| (v * psi.cos(), v * psi.sin(), v * delta.tan() / wheelbase);
    let h = dt / substeps as f64;
    let (mut x, mut y, mut psi) = (state.p.x, state.p.y, state.psi);
    for _ in 0..substeps {
        let k1 = f(psi);
        let k2 = f(psi + 0.5 * h * k1.2);
        let k3 = f(psi + 0.5 * h * k2.2);
        let k4 = f(psi + h * k3.2);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        psi += h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
    }
    VehicleState {
        p: Vec2::new(x, y),
        psi,
    }
}

fn criterion_7() -> Outcome {
    let worst = (0..RK4_DRAWS as u64)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(7_000 + draw);
            let wheelbase = rng.gen_range(0.5..5.0);
            let delta_max = rng.gen_range(0.1..1.2);
            let params = KinematicParams::new(wheelbase, delta_max).unwrap();
            let v = rng.gen_range(0.0..15.0);
            let dt: f64 = [0.001, 0.005, 0.01, 0.02, 0.05, 0.1][rng.gen_range(0..6)];
            let steps = (1.0 / dt).round() as usize;
            let start = VehicleState::new(
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-4.0..4.0),
            );
            let (mut exact, mut reference) = (start, start);
            let mut dev = 0.0_f64;
            for _ in 0..steps {
                let delta = rng.gen_range(-delta_max..=delta_max);
                exact = kinematic_step(exact, delta, v, dt, &params).unwrap();
                reference = rk4_reference(reference, delta, v, dt, wheelbase, RK4_SUBSTEPS);
                dev = dev.max(exact.p.distance(reference.p));
            }
            dev
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= RK4_TOL,
        format!("{RK4_DRAWS} draws over 1 s, max deviation {worst:.2e} m"),
    )
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();

    // Composition of delay lines.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut composition = true;
    for _ in 0..200 {
        let (k1, k2) = (rng.gen_range(0..20), rng.gen_range(0..20));
        let mut a = DelayLine::new(k1, 0.0);
        let mut b = DelayLine::new(k2, 0.0);
        let mut c = DelayLine::new(k1 + k2, 0.0);
        for _ in 0..100 {
            let x: f64 = rng.gen();
            composition &= b.push(a.push(x)) == c.push(x);
        }
    }
    notes.push(format!("composition {}", if composition { "ok" } else { "FAILED" }));

    // The whole dead time on the input side versus the output side.
    let mut base = builtin_config("fig3_stanley").unwrap();
    base.delays.input_s = 0.4;
    base.delays.output_s = 0.0;
    let k = (0.4 / base.dt_s).round() as usize;
    let on_input = run_scenario(&base).unwrap();
    base.delays.input_s = 0.0;
    base.delays.output_s = 0.4;
    let on_output = run_scenario(&base).unwrap();
    let offset = Vec2::from_heading(base.initial_pose.psi_rad) * (base.speed.at(0.0) * 0.4);
    let (dp, dpsi) = shifted_deviation(&on_output, &on_input, k, offset);
    let relocation = dp <= RELOCATION_TOL && dpsi <= RELOCATION_TOL;
    notes.push(format!("relocation err {dp:.2e} m / {dpsi:.2e} rad"));

    // A compensator with zero assumed dead time passes feedback through.
    let cfg = CompensatorConfig {
        enabled: true,
        dt_hat: 0.0,
        wheelbase_hat: 1.0,
    };
    let mut comp = Compensator::new(&cfg, 0.01, 0.3, 1.0).unwrap();
    let mut passthrough = true;
    for _ in 0..1000 {
        let y = VehicleState::new(
            rng.gen_range(-1e3..1e3),
            rng.gen_range(-1e3..1e3),
            rng.gen_range(-10.0..10.0),
        );
        let out = comp.tick(&y, rng.gen_range(-0.5..0.5), rng.gen_range(0.0..15.0));
        passthrough &= out == y;
    }
    let mut scenario = builtin_config("fig8").unwrap();
    scenario.compensator.dt_hat_s = 0.0;
    let enabled_zero = run_scenario(&scenario).unwrap();
    scenario.compensator.enabled = false;
    let disabled = run_scenario(&scenario).unwrap();
    passthrough &= enabled_zero.rows == disabled.rows;
    notes.push(format!(
        "k = 0 pass-through {}",
        if passthrough { "ok" } else { "FAILED" }
    ));

    // Bit-identical reruns, in memory and on disk.
    let cfg = builtin_config("fig8").unwrap();
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let fa = write_trace(&a, dir.path(), "a").unwrap();
    let fb = write_trace(&b, dir.path(), "b").unwrap();
    let deterministic = a.rows == b.rows && std::fs::read(fa).unwrap() == std::fs::read(fb).unwrap();
    notes.push(format!("determinism {}", if deterministic { "ok" } else { "FAILED" }));

    outcome(
        composition && relocation && passthrough && deterministic,
        notes.join("; "),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("exact prediction and time-shifted path", criterion_1),
        ("dead time turns convergence into oscillation", criterion_2),
        ("oscillation grows with Stanley gain", criterion_3),
        ("compensation ordering on the kinetic course", criterion_4),
        ("robustness to wheelbase error and acceleration", criterion_5),
        ("predictor queue stays bounded", criterion_6),
        ("exact kinematic step against RK4", criterion_7),
        ("delay structure properties", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] {}. {name}: {} ({:.2?})",
            i + 1,
            result.detail,
            start.elapsed()
        );
        if !result.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
