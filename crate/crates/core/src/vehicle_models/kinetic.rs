use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotate, Vec2};

const GRAVITY: f64 = 9.81;
/// The RK4 integration never uses steps longer than this.
const MAX_SUBSTEP: f64 = 1e-3;
/// Floor on the longitudinal speed inside the slip-angle computation.
const MIN_SLIP_SPEED: f64 = 0.1;

/// Magic-formula lateral coefficients; `d` is the peak friction
/// coefficient (force per unit normal load).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacejkaCoeffs {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl PacejkaCoeffs {
    pub const fn new(b: f64, c: f64, d: f64, e: f64) -> Self {
        Self { b, c, d, e }
    }
}

/// `F_y = D·F_z·sin(C·atan(Bα − E(Bα − atan(Bα))))`.
pub fn pacejka_lateral_force(alpha: f64, f_z: f64, coeffs: &PacejkaCoeffs) -> f64 {
    let PacejkaCoeffs { b, c, d, e } = *coeffs;
    let ba = b * alpha;
    d * f_z * (c * (ba - e * (ba - ba.atan())).atan()).sin()
}

/// Kinetic single-track state. `p` is the rear-axle position (same reference
/// point as the kinematic model); the velocities are body-frame velocities
/// of the centre of gravity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynVehicleState {
    pub p: Vec2,
    pub psi: f64,
    pub v_long: f64,
    pub v_lat: f64,
    pub yaw_rate: f64,
}

impl DynVehicleState {
    pub fn new(p: Vec2, psi: f64, v_long: f64) -> Self {
        Self {
            p,
            psi,
            v_long,
            v_lat: 0.0,
            yaw_rate: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.p.is_finite()
            && self.psi.is_finite()
            && self.v_long.is_finite()
            && self.v_lat.is_finite()
            && self.yaw_rate.is_finite()
    }

    fn axpy(&self, h: f64, d: &Derivative) -> Self {
        Self {
            p: self.p + d.p * h,
            psi: self.psi + d.psi * h,
            v_long: self.v_long + d.v_long * h,
            v_lat: self.v_lat + d.v_lat * h,
            yaw_rate: self.yaw_rate + d.yaw_rate * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynParams {
    pub wheelbase_l: f64,
    pub dist_cg_front: f64,
    pub dist_cg_rear: f64,
    pub mass: f64,
    pub yaw_inertia: f64,
    pub cg_height: f64,
    pub pacejka_front: PacejkaCoeffs,
    pub pacejka_rear: PacejkaCoeffs,
    pub delta_max: f64,
    /// Time constant of the first-order speed loop.
    pub speed_lag: f64,
}

impl Default for DynParams {
    fn default() -> Self {
        let wheelbase = 2.7;
        Self {
            wheelbase_l: wheelbase,
            dist_cg_front: 0.5 * wheelbase,
            dist_cg_rear: 0.5 * wheelbase,
            mass: 1500.0,
            yaw_inertia: 2500.0,
            cg_height: 0.5,
            pacejka_front: PacejkaCoeffs::new(10.0, 1.9, 1.0, 0.97),
            pacejka_rear: PacejkaCoeffs::new(12.0, 1.9, 1.0, 0.97),
            // kinematic minimum turning radius of 3.8 m
            delta_max: (wheelbase / 3.8f64).atan(),
            speed_lag: 0.2,
        }
    }
}

impl DynParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wheelbase_m", self.wheelbase_l),
            ("dist_cg_front_m", self.dist_cg_front),
            ("dist_cg_rear_m", self.dist_cg_rear),
            ("mass_kg", self.mass),
            ("yaw_inertia_kgm2", self.yaw_inertia),
            ("cg_height_m", self.cg_height),
            ("speed_lag_s", self.speed_lag),
            ("pacejka_front.b", self.pacejka_front.b),
            ("pacejka_front.c", self.pacejka_front.c),
            ("pacejka_front.d", self.pacejka_front.d),
            ("pacejka_rear.b", self.pacejka_rear.b),
            ("pacejka_rear.c", self.pacejka_rear.c),
            ("pacejka_rear.d", self.pacejka_rear.d),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("plant.{name}"), "must be positive"));
            }
        }
        if ((self.dist_cg_front + self.dist_cg_rear) - self.wheelbase_l).abs() > 1e-9 {
            return Err(Error::config(
                "plant.dist_cg_front_m",
                "front and rear CG distances must add up to the wheelbase",
            ));
        }
        if !(self.delta_max > 0.0 && self.delta_max < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("plant.delta_max_rad", "must lie in (0, π/2)"));
        }
        Ok(())
    }

    /// Static axle loads shifted by longitudinal load transfer.
    fn axle_loads(&self, a_long: f64) -> (f64, f64) {
        let l = self.wheelbase_l;
        let transfer = self.mass * a_long * self.cg_height / l;
        let front = self.mass * GRAVITY * self.dist_cg_rear / l - transfer;
        let rear = self.mass * GRAVITY * self.dist_cg_front / l + transfer;
        (front.max(0.0), rear.max(0.0))
    }
}

#[derive(Debug, Clone, Copy)]
struct Derivative {
    p: Vec2,
    psi: f64,
    v_long: f64,
    v_lat: f64,
    yaw_rate: f64,
}

fn derivative(s: &DynVehicleState, delta: f64, v_cmd: f64, params: &DynParams) -> Derivative {
    let (a, b) = (params.dist_cg_front, params.dist_cg_rear);
    let a_long = (v_cmd - s.v_long) / params.speed_lag;
    let (fz_front, fz_rear) = params.axle_loads(a_long);

    let vx = s.v_long.max(MIN_SLIP_SPEED);
    let alpha_f = delta - (s.v_lat + a * s.yaw_rate).atan2(vx);
    let alpha_r = -(s.v_lat - b * s.yaw_rate).atan2(vx);
    let fy_front = pacejka_lateral_force(alpha_f, fz_front, &params.pacejka_front);
    let fy_rear = pacejka_lateral_force(alpha_r, fz_rear, &params.pacejka_rear);

    Derivative {
        p: rotate(s.psi, Vec2::new(s.v_long, s.v_lat - b * s.yaw_rate)),
        psi: s.yaw_rate,
        v_long: a_long,
        v_lat: (fy_front + fy_rear) / params.mass - s.v_long * s.yaw_rate,
        yaw_rate: (a * fy_front - b * fy_rear) / params.yaw_inertia,
    }
}

/// Advances the kinetic single-track model by `dt` with constant steering
/// and speed command, using RK4 on sub-steps of at most 1 ms.
pub fn kinetic_step(
    state: DynVehicleState,
    delta: f64,
    v_cmd: f64,
    dt: f64,
    params: &DynParams,
) -> Result<DynVehicleState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    if !state.is_finite() || !delta.is_finite() || !v_cmd.is_finite() {
        return Err(Error::domain("kinetic model state or input is not finite"));
    }
    let delta = delta.clamp(-params.delta_max, params.delta_max);
    let n = (dt / MAX_SUBSTEP - 1e-9).ceil().max(1.0) as usize;
    let h = dt / n as f64;
    let mut s = state;
    for _ in 0..n {
        let k1 = derivative(&s, delta, v_cmd, params);
        let k2 = derivative(&s.axpy(0.5 * h, &k1), delta, v_cmd, params);
        let k3 = derivative(&s.axpy(0.5 * h, &k2), delta, v_cmd, params);
        let k4 = derivative(&s.axpy(h, &k3), delta, v_cmd, params);
        let combined = Derivative {
            p: (k1.p + (k2.p + k3.p) * 2.0 + k4.p) * (1.0 / 6.0),
            psi: (k1.psi + 2.0 * (k2.psi + k3.psi) + k4.psi) / 6.0,
            v_long: (k1.v_long + 2.0 * (k2.v_long + k3.v_long) + k4.v_long) / 6.0,
            v_lat: (k1.v_lat + 2.0 * (k2.v_lat + k3.v_lat) + k4.v_lat) / 6.0,
            yaw_rate: (k1.yaw_rate + 2.0 * (k2.yaw_rate + k3.yaw_rate) + k4.yaw_rate) / 6.0,
        };
        s = s.axpy(h, &combined);
    }
    if !s.is_finite() {
        return Err(Error::domain("kinetic model diverged"));
    }
    Ok(s)
}
