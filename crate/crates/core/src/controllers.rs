//! Path-tracking steering laws: Stanley, pure pursuit and a saturated
//! bang-bang law switching on a minimum-time line-reaching surface.
//!
//! Sign conventions: the cross-track error `e` is positive when the
//! reference point lies left of the path, headings and steering angles are
//! positive counter-clockwise. Every law steers toward the path, so a
//! positive `e` produces a negative (rightward) steering command.

use crate::error::{Error, Result};
use crate::geometry::{wrap_to_pi, PathProjection, ReferencePath, Vec2};
use crate::vehicle_models::VehicleState;

/// How far behind the hint the projection search may look.
pub const SEARCH_BEHIND: f64 = 2.0;

/// What a controller sees in one control period.
#[derive(Debug, Clone, Copy)]
pub struct ControllerInput<'a> {
    /// Feedback pose (raw, delayed or compensated).
    pub state: VehicleState,
    pub v: f64,
    pub path: &'a ReferencePath,
    /// Arc length of the previous projection of this controller.
    pub s_hint: f64,
    /// Forward extent of the projection window beyond `s_hint`.
    pub search_ahead: f64,
}

impl ControllerInput<'_> {
    fn project(&self, point: Vec2) -> Result<PathProjection> {
        self.path.project_within(
            point,
            self.s_hint - SEARCH_BEHIND,
            self.s_hint + self.search_ahead,
            self.s_hint,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Unclamped steering command.
    pub delta: f64,
    /// Projection of the controller's own reference point, used as the next
    /// hint.
    pub s_star: f64,
    /// True when pure pursuit found no lookahead point on the path and fell
    /// back to the closest point or the path end.
    pub lookahead_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanleyParams {
    pub gain_k: f64,
    pub wheelbase_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurePursuitParams {
    pub lookahead_lh: f64,
    pub wheelbase_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DubinsRobustParams {
    /// Saturation steering angle δ̄.
    pub delta_bar: f64,
    /// Robustness factor in (0, 1); the assumed turning radius is the
    /// vehicle's minimum radius divided by `k_rob`.
    pub k_rob: f64,
    /// Width of the linear zone around the switching surface, expressed as
    /// the lateral offset whose switching-curve heading defines it.
    pub boundary_layer: f64,
    pub wheelbase_l: f64,
}

impl DubinsRobustParams {
    pub fn effective_radius(&self) -> f64 {
        self.wheelbase_l / self.delta_bar.tan() / self.k_rob
    }

    /// Boundary-layer half width in σ units (radians).
    pub fn sigma_layer(&self) -> f64 {
        let r = self.effective_radius();
        (1.0 - self.boundary_layer.min(2.0 * r) / r).acos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Controller {
    Stanley(StanleyParams),
    PurePursuit(PurePursuitParams),
    DubinsRobust(DubinsRobustParams),
}

impl Controller {
    pub fn validate(&self) -> Result<()> {
        match self {
            Controller::Stanley(p) => {
                positive("controller.gain_k", p.gain_k)?;
                positive("plant.wheelbase_m", p.wheelbase_l)
            }
            Controller::PurePursuit(p) => {
                positive("controller.lookahead_m", p.lookahead_lh)?;
                positive("plant.wheelbase_m", p.wheelbase_l)
            }
            Controller::DubinsRobust(p) => {
                if !(p.k_rob > 0.0 && p.k_rob < 1.0) {
                    return Err(Error::config("controller.k_rob", "must lie in (0, 1)"));
                }
                if !(p.delta_bar > 0.0 && p.delta_bar < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::config("controller.delta_bar_rad", "must lie in (0, π/2)"));
                }
                positive("controller.boundary_layer_m", p.boundary_layer)?;
                positive("plant.wheelbase_m", p.wheelbase_l)
            }
        }
    }

    pub fn steer(&self, input: &ControllerInput<'_>) -> Result<ControlOutput> {
        match self {
            Controller::Stanley(p) => stanley_control(input, p),
            Controller::PurePursuit(p) => pure_pursuit_control(input, p),
            Controller::DubinsRobust(p) => dubins_robust_control(input, p),
        }
    }

    /// Reference point whose projection the controller threads as its hint.
    pub fn reference_point(&self, state: &VehicleState) -> Vec2 {
        match self {
            Controller::Stanley(p) => front_axle(state, p.wheelbase_l),
            _ => state.p,
        }
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, "must be positive"))
    }
}

fn front_axle(state: &VehicleState, wheelbase: f64) -> Vec2 {
    state.p + Vec2::from_heading(state.psi) * wheelbase
}

/// `δ = (φ_ref − φ) − atan(k·e / v)`.
pub fn stanley_law(heading_error: f64, e: f64, v: f64, gain_k: f64) -> f64 {
    -heading_error - (gain_k * e / v).atan()
}

pub fn stanley_control(input: &ControllerInput<'_>, params: &StanleyParams) -> Result<ControlOutput> {
    if !(input.v > 0.0) {
        return Err(Error::domain(format!("Stanley control needs v > 0, got {}", input.v)));
    }
    let proj = input.project(front_axle(&input.state, params.wheelbase_l))?;
    let heading_error = wrap_to_pi(input.state.psi - proj.phi_ref);
    Ok(ControlOutput {
        delta: stanley_law(heading_error, proj.e_signed, input.v, params.gain_k),
        s_star: proj.s_star,
        lookahead_fallback: false,
    })
}

/// `δ = atan(2·l·e_pp / l_h²)`, with `e_pp` the lateral offset of the target
/// point in the vehicle frame (positive to the left).
pub fn pure_pursuit_law(e_pp: f64, wheelbase: f64, lookahead: f64) -> f64 {
    (2.0 * wheelbase * e_pp / (lookahead * lookahead)).atan()
}

pub fn pure_pursuit_control(input: &ControllerInput<'_>, params: &PurePursuitParams) -> Result<ControlOutput> {
    let p = input.state.p;
    let proj = input.project(p)?;
    let lh = params.lookahead_lh;
    let total = input.path.total_length();
    let dist = |s: f64| p.distance(input.path.point_at_clamped(s).position);

    let (target_s, fallback) = if dist(proj.s_star) >= lh {
        // farther than l_h from the path: aim at the closest point
        (proj.s_star, true)
    } else {
        let step = lh / 8.0;
        let mut lo = proj.s_star;
        let mut hi = None;
        while lo < total {
            let next = (lo + step).min(total);
            if dist(next) >= lh {
                hi = Some(next);
                break;
            }
            lo = next;
        }
        match hi {
            Some(mut hi) => {
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if dist(mid) >= lh {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                (hi, false)
            }
            None => (total, true),
        }
    };
    let target = input.path.point_at_clamped(target_s).position;
    let e_pp = Vec2::from_heading(input.state.psi).cross(target - p);
    Ok(ControlOutput {
        delta: pure_pursuit_law(e_pp, params.wheelbase_l, lh),
        s_star: proj.s_star,
        lookahead_fallback: fallback,
    })
}

/// Switching function of the minimum-time line-reaching manoeuvre with
/// turning radius `radius`: zero on the arc that ends tangent to the path.
pub fn dubins_sigma(e: f64, heading_error: f64, radius: f64) -> f64 {
    let reach = (1.0 - e.abs().min(2.0 * radius) / radius).acos();
    heading_error + e.signum() * reach
}

pub fn dubins_robust_law(e: f64, heading_error: f64, params: &DubinsRobustParams) -> f64 {
    let sigma = dubins_sigma(e, heading_error, params.effective_radius());
    -params.delta_bar * (sigma / params.sigma_layer()).clamp(-1.0, 1.0)
}

pub fn dubins_robust_control(input: &ControllerInput<'_>, params: &DubinsRobustParams) -> Result<ControlOutput> {
    let proj = input.project(input.state.p)?;
    let heading_error = wrap_to_pi(input.state.psi - proj.phi_ref);
    Ok(ControlOutput {
        delta: dubins_robust_law(proj.e_signed, heading_error, params),
        s_star: proj.s_star,
        lookahead_fallback: false,
    })
}
