use crate::error::{Error, Result};

/// Inner integration step of the steering actuator.
pub const STEERING_INNER_STEP: f64 = 1e-3;

/// Steering actuator: three identical cascaded first-order lags, advanced
/// in 1 ms sub-steps. Unity DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringFilter {
    stages: [f64; 3],
    tau: f64,
}

impl SteeringFilter {
    pub fn new(tau: f64) -> Result<Self> {
        Self::at_rest(tau, 0.0)
    }

    /// Filter in steady state at `delta`.
    pub fn at_rest(tau: f64, delta: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config("steering_filter.tau_s", "must be positive"));
        }
        Ok(Self {
            stages: [delta; 3],
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn output(&self) -> f64 {
        self.stages[2]
    }

    /// Number of inner steps in `dt`, if `dt` is a whole multiple of the
    /// inner step.
    pub fn substeps(dt: f64) -> Result<usize> {
        let ratio = dt / STEERING_INNER_STEP;
        let n = ratio.round();
        if !(n >= 1.0 && (ratio - n).abs() <= 1e-9 * n.max(1.0)) {
            return Err(Error::config(
                "dt_s",
                format!("steering filter needs a multiple of {STEERING_INNER_STEP} s, got {dt}"),
            ));
        }
        Ok(n as usize)
    }

    /// One inner step with held input.
    pub fn step_inner(&mut self, delta_cmd: f64) -> f64 {
        let gain = -(-STEERING_INNER_STEP / self.tau).exp_m1();
        let mut input = delta_cmd;
        for stage in &mut self.stages {
            *stage += gain * (input - *stage);
            input = *stage;
        }
        self.stages[2]
    }

    /// Advances the filter by `dt` with held input and returns the output.
    pub fn step(&mut self, delta_cmd: f64, dt: f64) -> Result<f64> {
        let n = Self::substeps(dt)?;
        for _ in 0..n {
            self.step_inner(delta_cmd);
        }
        Ok(self.output())
    }
}
