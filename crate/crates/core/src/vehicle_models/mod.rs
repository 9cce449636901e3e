//! Plant models: the exact-arc kinematic single-track step, the kinetic
//! single-track model with magic-formula tires, and the steering actuator.

mod kinetic;
mod steering;

pub use kinetic::{kinetic_step, pacejka_lateral_force, DynParams, DynVehicleState, PacejkaCoeffs};
pub use steering::{SteeringFilter, STEERING_INNER_STEP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotate, Vec2};

/// Below this `|yaw_rate · dt|` the arc increment switches to its series
/// expansion instead of dividing by the yaw rate.
pub const YAW_SERIES_THRESHOLD: f64 = 1e-6;

/// Rear-axle pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub p: Vec2,
    pub psi: f64,
}

impl VehicleState {
    pub const fn new(x: f64, y: f64, psi: f64) -> Self {
        Self {
            p: Vec2::new(x, y),
            psi,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.psi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicParams {
    pub wheelbase_l: f64,
    pub delta_max: f64,
}

impl KinematicParams {
    pub fn new(wheelbase_l: f64, delta_max: f64) -> Result<Self> {
        if !(wheelbase_l.is_finite() && wheelbase_l > 0.0) {
            return Err(Error::config("wheelbase_m", "must be positive"));
        }
        if !(delta_max > 0.0 && delta_max < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("delta_max_rad", "must lie in (0, π/2)"));
        }
        Ok(Self { wheelbase_l, delta_max })
    }

    pub fn clamp_steering(&self, delta: f64) -> f64 {
        delta.clamp(-self.delta_max, self.delta_max)
    }
}

/// Pose increment of the kinematic single-track model over one step of
/// constant steering: the exact circular arc of radius `v / yaw_rate`.
pub fn kinematic_increment(psi: f64, delta: f64, v: f64, dt: f64, wheelbase: f64) -> (Vec2, f64) {
    let yaw_rate = delta.tan() / wheelbase * v;
    let dpsi = yaw_rate * dt;
    let local = if dpsi.abs() < YAW_SERIES_THRESHOLD {
        Vec2::new(v * dt, 0.5 * v * dt * dpsi)
    } else {
        let half = (0.5 * dpsi).sin();
        // 1 - cos x = 2 sin²(x/2)
        Vec2::new(dpsi.sin(), 2.0 * half * half) * (v / yaw_rate)
    };
    (rotate(psi, local), dpsi)
}

pub fn kinematic_step(
    state: VehicleState,
    delta: f64,
    v: f64,
    dt: f64,
    params: &KinematicParams,
) -> Result<VehicleState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let (dp, dpsi) = kinematic_increment(state.psi, delta, v, dt, params.wheelbase_l);
    Ok(VehicleState {
        p: state.p + dp,
        psi: state.psi + dpsi,
    })
}
