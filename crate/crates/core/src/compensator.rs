//! Nonlinear dead-time compensator.
//!
//! A kinematic single-track model is driven with the issued steering
//! commands. Its last `k` states are kept in a queue that is re-centred every
//! step so the oldest position is the origin; this keeps the queue bounded
//! even though the model itself is not internally stable. The undelayed
//! state is estimated from the delayed feedback `y` as
//!
//! ```text
//! p̂ = p_y + R(ψ_y − ψ̂_oldest) · p̂_newest
//! ψ̂ = ψ_y + (ψ̂_newest − ψ̂_oldest)
//! ```
//!
//! i.e. the model's displacement over the dead time, rotated from the model
//! frame into the frame of the delayed vehicle pose. For a kinematic plant
//! with matching wheelbase, speed and dead time this prediction is exact,
//! whatever the initial pose of the model.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::{rotate, wrap_unchecked, Vec2};
use crate::vehicle_models::{kinematic_increment, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueEntry {
    /// Position relative to the oldest entry.
    p: Vec2,
    /// Heading wrapped into [0, 2π).
    psi: f64,
    /// Unwrapped heading relative to the oldest entry.
    dpsi: f64,
}

/// The `k + 1` most recent prediction-model states, oldest first, shifted so
/// the oldest position is exactly the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorQueue {
    k: usize,
    entries: VecDeque<QueueEntry>,
    wheelbase_hat: f64,
    /// Absolute (unshifted) pose of the newest model state. Diagnostic only;
    /// it is allowed to drift without bound.
    model_pose: VehicleState,
}

impl PredictorQueue {
    /// Queue of a model at rest: all positions zero, all headings `psi0`.
    pub fn new(k: usize, psi0: f64, wheelbase_hat: f64) -> Result<Self> {
        if !(wheelbase_hat.is_finite() && wheelbase_hat > 0.0) {
            return Err(Error::config("compensator.wheelbase_hat_m", "must be positive"));
        }
        if !psi0.is_finite() {
            return Err(Error::domain("initial heading must be finite"));
        }
        let entry = QueueEntry {
            p: Vec2::ZERO,
            psi: wrap_unchecked(psi0),
            dpsi: 0.0,
        };
        Ok(Self {
            k,
            entries: std::iter::repeat_n(entry, k + 1).collect(),
            wheelbase_hat,
            model_pose: VehicleState {
                p: Vec2::ZERO,
                psi: psi0,
            },
        })
    }

    /// Queue of a model that has been driving straight at speed `v` for the
    /// whole dead time.
    pub fn with_straight_history(k: usize, psi0: f64, v: f64, dt: f64, wheelbase_hat: f64) -> Result<Self> {
        let mut q = Self::new(k, psi0, wheelbase_hat)?;
        for _ in 0..k {
            q.step(0.0, v, dt);
        }
        Ok(q)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn wheelbase_hat(&self) -> f64 {
        self.wheelbase_hat
    }

    fn oldest(&self) -> &QueueEntry {
        self.entries.front().expect("queue holds k + 1 entries")
    }

    fn newest(&self) -> &QueueEntry {
        self.entries.back().expect("queue holds k + 1 entries")
    }

    /// Shifted positions, oldest first.
    pub fn shifted_positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.entries.iter().map(|e| e.p)
    }

    /// Wrapped model headings, oldest first.
    pub fn headings(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.psi)
    }

    /// Newest shifted position: the model displacement over the dead time.
    pub fn newest_shifted_position(&self) -> Vec2 {
        self.newest().p
    }

    pub fn model_pose(&self) -> VehicleState {
        self.model_pose
    }

    /// Advances the model by one step with steering `delta`, drops the oldest
    /// state and re-centres the queue on the new oldest position.
    pub fn step(&mut self, delta: f64, v: f64, dt: f64) {
        let newest = *self.newest();
        let (dp, dpsi) = f_pm(newest.psi, delta, v, dt, self.wheelbase_hat);
        self.entries.push_back(QueueEntry {
            p: newest.p + dp,
            psi: wrap_unchecked(newest.psi + dpsi),
            dpsi: newest.dpsi + dpsi,
        });
        self.entries.pop_front();

        let origin = *self.oldest();
        for e in &mut self.entries {
            e.p -= origin.p;
            e.dpsi -= origin.dpsi;
        }

        self.model_pose.p += dp;
        self.model_pose.psi += dpsi;
    }

    /// Estimate of the state `k` steps after the delayed feedback `y_del`.
    pub fn predict(&self, y_del: &VehicleState) -> VehicleState {
        let oldest = self.oldest();
        let newest = self.newest();
        VehicleState {
            p: y_del.p + rotate(y_del.psi - oldest.psi, newest.p),
            psi: y_del.psi + (newest.dpsi - oldest.dpsi),
        }
    }
}

/// State increment of the prediction model; the same arithmetic as the
/// kinematic plant step.
pub fn f_pm(psi_hat: f64, delta: f64, v: f64, dt: f64, wheelbase_hat: f64) -> (Vec2, f64) {
    kinematic_increment(psi_hat, delta, v, dt, wheelbase_hat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorConfig {
    pub enabled: bool,
    /// Dead time the compensator assumes, in seconds.
    pub dt_hat: f64,
    pub wheelbase_hat: f64,
}

/// Dead-time compensation in the feedback path: one [`tick`](Self::tick) per
/// control period.
#[derive(Debug, Clone)]
pub struct Compensator {
    enabled: bool,
    dt: f64,
    queue: PredictorQueue,
}

impl Compensator {
    /// Builds a compensator whose model has been driving straight at `v0`
    /// with heading `psi0` before the first tick.
    pub fn new(config: &CompensatorConfig, dt: f64, psi0: f64, v0: f64) -> Result<Self> {
        let k = if config.enabled {
            crate::delay::delay_steps(config.dt_hat, dt, "compensator.dt_hat_s")?
        } else {
            0
        };
        Ok(Self {
            enabled: config.enabled && k > 0,
            dt,
            queue: PredictorQueue::with_straight_history(k, psi0, v0, dt, config.wheelbase_hat)?,
        })
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn queue(&self) -> &PredictorQueue {
        &self.queue
    }

    /// Feeds the most recently issued steering command into the model and
    /// returns the compensated feedback for this period.
    pub fn tick(&mut self, y_del: &VehicleState, delta_issued: f64, v: f64) -> VehicleState {
        if !self.enabled {
            return *y_del;
        }
        self.queue.step(delta_issued, v, self.dt);
        self.queue.predict(y_del)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle_models::{kinematic_step, KinematicParams};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, TAU};

    #[test]
    fn f_pm_examples() {
        assert_eq!(f_pm(0.0, 0.0, 1.0, 0.01, 1.0), (Vec2::new(0.01, 0.0), 0.0));
        let (dp, dpsi) = f_pm(FRAC_PI_2, 0.0, 1.0, 0.01, 1.0);
        assert!(dp.x.abs() < 1e-17 && (dp.y - 0.01).abs() < 1e-17);
        assert_eq!(dpsi, 0.0);
    }

    #[test]
    fn f_pm_is_bitwise_the_plant_increment() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let psi = rng.gen_range(-10.0..10.0);
            let delta = rng.gen_range(-0.6..0.6);
            let v = rng.gen_range(0.0..15.0);
            let l = rng.gen_range(0.5..4.0);
            let params = KinematicParams::new(l, 0.6).unwrap();
            let start = VehicleState::new(0.0, 0.0, psi);
            let next = kinematic_step(start, delta, v, 0.01, &params).unwrap();
            let (dp, dpsi) = f_pm(psi, delta, v, 0.01, l);
            assert_eq!(next.p, dp);
            assert_eq!(next.psi, psi + dpsi);
        }
    }

    #[test]
    fn straight_queue_positions() {
        let mut q = PredictorQueue::new(3, 0.0, 1.0).unwrap();
        for _ in 0..3 {
            q.step(0.0, 1.0, 0.01);
        }
        let xs: Vec<f64> = q.shifted_positions().map(|p| p.x).collect();
        let expected = [0.0, 0.01, 0.02, 0.03];
        for (x, e) in xs.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        assert!(q.shifted_positions().all(|p| p.y == 0.0));
        assert_eq!(
            q,
            PredictorQueue::with_straight_history(3, 0.0, 1.0, 0.01, 1.0).unwrap()
        );
    }

    #[test]
    fn stationary_queue_stays_at_origin() {
        let mut q = PredictorQueue::new(5, 1.0, 2.7).unwrap();
        for i in 0..50 {
            q.step(0.3 * (i as f64).sin(), 0.0, 0.01);
        }
        assert!(q.shifted_positions().all(|p| p == Vec2::ZERO));
        let y = VehicleState::new(3.0, 4.0, 0.2);
        assert_eq!(q.predict(&y), y);
    }

    #[test]
    fn zero_dead_time_passes_through() {
        let mut q = PredictorQueue::new(0, 0.5, 1.0).unwrap();
        let y = VehicleState::new(1.0, -2.0, 0.7);
        for _ in 0..10 {
            q.step(0.4, 3.0, 0.01);
            assert_eq!(q.predict(&y), y);
        }
        let cfg = CompensatorConfig {
            enabled: true,
            dt_hat: 0.0,
            wheelbase_hat: 1.0,
        };
        let mut c = Compensator::new(&cfg, 0.01, 0.0, 1.0).unwrap();
        assert_eq!(c.tick(&y, 0.3, 1.0), y);
    }

    #[test]
    fn disabled_compensator_is_identity() {
        let cfg = CompensatorConfig {
            enabled: false,
            dt_hat: 0.4,
            wheelbase_hat: 1.0,
        };
        let mut c = Compensator::new(&cfg, 0.01, 0.0, 1.0).unwrap();
        let before = c.queue().clone();
        let y = VehicleState::new(1.0, 2.0, 3.0);
        assert_eq!(c.tick(&y, 0.5, 1.0), y);
        assert_eq!(c.queue(), &before);
    }

    #[test]
    fn invariants_hold_under_random_steering() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (k, dt, v_max) = (40, 0.01, 15.0);
        let mut q = PredictorQueue::new(k, 0.0, 2.7).unwrap();
        for _ in 0..20_000 {
            q.step(rng.gen_range(-0.6..0.6), rng.gen_range(0.0..v_max), dt);
            assert_eq!(q.shifted_positions().next(), Some(Vec2::ZERO));
            for p in q.shifted_positions() {
                assert!(p.norm() <= v_max * k as f64 * dt + 1e-9);
            }
            assert!(q.headings().all(|h| (0.0..TAU).contains(&h)));
        }
    }

    #[test]
    fn heading_increment_survives_wrapping() {
        // the model heading crosses 2π while the plant heading does not
        let mut q = PredictorQueue::new(20, TAU - 0.05, 1.0).unwrap();
        let params = KinematicParams::new(1.0, 0.6).unwrap();
        let mut plant = VehicleState::new(0.0, 0.0, 0.3);
        let start = plant;
        for _ in 0..20 {
            q.step(0.5, 2.0, 0.01);
            plant = kinematic_step(plant, 0.5, 2.0, 0.01, &params).unwrap();
        }
        let pred = q.predict(&start);
        assert!((pred.psi - plant.psi).abs() < 1e-12);
        assert!((pred.p - plant.p).norm() < 1e-12);
    }

    #[test]
    fn prediction_is_exact_for_matching_kinematic_plant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (k, dt, v, l) = (25, 0.01, 5.0, 2.0);
        let params = KinematicParams::new(l, 0.6).unwrap();
        // plant history x_0 .. x_N under random steering
        let mut xs = vec![VehicleState::new(4.0, -7.0, 2.0)];
        let deltas: Vec<f64> = (0..400).map(|_| rng.gen_range(-0.6..0.6)).collect();
        for &d in &deltas {
            let next = kinematic_step(*xs.last().unwrap(), d, v, dt, &params).unwrap();
            xs.push(next);
        }
        // model starts elsewhere, with a different heading
        let mut q = PredictorQueue::new(k, 5.0, l).unwrap();
        for (i, &d) in deltas.iter().enumerate() {
            q.step(d, v, dt);
            let now = i + 1;
            if now >= k {
                let pred = q.predict(&xs[now - k]);
                assert!((pred.p - xs[now].p).norm() < 1e-9, "step {now}");
                assert!((pred.psi - xs[now].psi).abs() < 1e-9);
            }
        }
    }
}
