//! The closed loop: plant, delay lines, compensator and controller.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::compensator::Compensator;
use crate::controllers::{ControllerInput, SEARCH_BEHIND};
use crate::delay::DelayLine;
use crate::error::{Error, Result};
use crate::geometry::{ReferencePath, Vec2};
use crate::vehicle_models::{
    kinematic_step, kinetic_step, DynParams, DynVehicleState, KinematicParams, SteeringFilter, VehicleState,
    STEERING_INNER_STEP,
};

use super::config::{Prepared, ScenarioConfig};

/// Extra forward reach of every projection window, in metres.
const SEARCH_MARGIN: f64 = 5.0;

/// One sample of the closed loop at `t = i·dt`, taken before the plant is
/// advanced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// True rear-axle pose of the plant.
    pub state: VehicleState,
    /// Plant speed (longitudinal speed for the kinetic model).
    pub v: f64,
    /// Lateral error of the true pose, positive to the left of the path.
    pub e: f64,
    pub s_star: f64,
    /// Feedback as it arrives at the controller side, before compensation.
    pub y_del: VehicleState,
    /// Feedback the controller acts on.
    pub y_hat: VehicleState,
    pub delta_cmd: f64,
    /// Steering angle applied to the plant during the following step.
    pub delta_act: f64,
    pub lookahead_fallback: bool,
    /// Newest shifted position of the predictor queue.
    pub queue_newest: Vec2,
    /// Absolute pose of the predictor's internal model.
    pub model_pose: VehicleState,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub config: ScenarioConfig,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.e).collect()
    }

    pub fn steering(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta_act).collect()
    }
}

enum Plant {
    Kinematic {
        state: VehicleState,
        params: KinematicParams,
    },
    Kinetic {
        state: DynVehicleState,
        params: DynParams,
        filter: Option<SteeringFilter>,
    },
}

impl Plant {
    fn pose(&self) -> VehicleState {
        match self {
            Plant::Kinematic { state, .. } => *state,
            Plant::Kinetic { state, .. } => VehicleState {
                p: state.p,
                psi: state.psi,
            },
        }
    }

    fn speed(&self, v_cmd: f64) -> f64 {
        match self {
            Plant::Kinematic { .. } => v_cmd,
            Plant::Kinetic { state, .. } => state.v_long,
        }
    }

    fn delta_max(&self) -> f64 {
        match self {
            Plant::Kinematic { params, .. } => params.delta_max,
            Plant::Kinetic { params, .. } => params.delta_max,
        }
    }

    /// Advances one control period; returns the steering angle reached.
    fn advance(&mut self, delta: f64, v: f64, dt: f64) -> Result<f64> {
        match self {
            Plant::Kinematic { state, params } => {
                *state = kinematic_step(*state, delta, v, dt, params)?;
                Ok(params.clamp_steering(delta))
            }
            Plant::Kinetic { state, params, filter } => {
                let mut actual = delta;
                for _ in 0..SteeringFilter::substeps(dt)? {
                    if let Some(f) = filter.as_mut() {
                        actual = f.step_inner(delta);
                    }
                    *state = kinetic_step(*state, actual, v, STEERING_INNER_STEP, params)?;
                }
                Ok(actual.clamp(-params.delta_max, params.delta_max))
            }
        }
    }
}

struct FeedbackNoise {
    rng: ChaCha8Rng,
    position: Option<Normal<f64>>,
    heading: Option<Normal<f64>>,
}

impl FeedbackNoise {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let normal = |std: f64| -> Result<Option<Normal<f64>>> {
            if std > 0.0 {
                Normal::new(0.0, std)
                    .map(Some)
                    .map_err(|e| Error::config("noise", e.to_string()))
            } else {
                Ok(None)
            }
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            position: normal(cfg.noise.position_std_m)?,
            heading: normal(cfg.noise.heading_std_rad)?,
        })
    }

    fn apply(&mut self, mut y: VehicleState) -> VehicleState {
        if let Some(n) = self.position {
            y.p.x += n.sample(&mut self.rng);
            y.p.y += n.sample(&mut self.rng);
        }
        if let Some(n) = self.heading {
            y.psi += n.sample(&mut self.rng);
        }
        y
    }
}

/// Poses of a vehicle that drove straight at `v` into `pose`, oldest first.
fn straight_history(pose: VehicleState, v: f64, dt: f64, k: usize) -> impl Iterator<Item = VehicleState> {
    let dir = Vec2::from_heading(pose.psi);
    (1..=k).rev().map(move |j| VehicleState {
        p: pose.p - dir * (v * dt * j as f64),
        psi: pose.psi,
    })
}

/// Runs a scenario to completion. Deterministic for a given config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimTrace> {
    let prepared = cfg.prepare()?;
    run_prepared(cfg, &prepared)
}

fn run_prepared(cfg: &ScenarioConfig, prep: &Prepared) -> Result<SimTrace> {
    let dt = cfg.dt_s;
    let path: &ReferencePath = &prep.path;
    let pose0 = VehicleState::new(cfg.initial_pose.x_m, cfg.initial_pose.y_m, cfg.initial_pose.psi_rad);
    let v0 = cfg.speed.at(0.0);

    let mut plant = match (&prep.kinematic, &prep.kinetic) {
        (Some(params), _) => Plant::Kinematic {
            state: pose0,
            params: *params,
        },
        (None, Some((params, tau))) => Plant::Kinetic {
            state: DynVehicleState::new(pose0.p, pose0.psi, v0),
            params: *params,
            filter: tau.map(SteeringFilter::new).transpose()?,
        },
        (None, None) => unreachable!("prepare always builds one plant"),
    };

    let mut noise = FeedbackNoise::new(cfg)?;
    let mut output_line = DelayLine::from_history(straight_history(pose0, v0, dt, prep.k_output));
    let mut input_line = DelayLine::new(prep.k_input, 0.0);
    let mut compensator = Compensator::new(&prep.compensator, dt, pose0.psi, v0)?;

    let v_max = cfg.speed.max();
    let k_total = prep.k_input + prep.k_output + prep.k_hat + 1;
    let controller_ahead = 2.0 * v_max * dt * k_total as f64 + SEARCH_MARGIN;
    let plant_ahead = 2.0 * v_max * dt + SEARCH_MARGIN;

    let controller = prep.controller;
    let mut controller_hint = path.project_global(controller.reference_point(&pose0))?.s_star;
    let mut plant_hint = path.project_global(pose0.p)?.s_star;
    let mut delta_prev = 0.0;
    let mut delta_act = 0.0;

    let mut rows = Vec::with_capacity(prep.steps + 1);
    for i in 0..=prep.steps {
        let t = i as f64 * dt;
        let v = cfg.speed.at(t);
        let pose = plant.pose();
        if !pose.is_finite() {
            return Err(Error::domain(format!("plant state diverged at t = {t}")));
        }

        let y_del = output_line.push(noise.apply(pose));
        let y_hat = compensator.tick(&y_del, delta_prev, v);
        let out = controller.steer(&ControllerInput {
            state: y_hat,
            v,
            path,
            s_hint: controller_hint,
            search_ahead: controller_ahead,
        })?;
        controller_hint = out.s_star;
        let delta_cmd = out.delta.clamp(-plant.delta_max(), plant.delta_max());
        delta_prev = delta_cmd;

        let proj = path.project_within(pose.p, plant_hint - SEARCH_BEHIND, plant_hint + plant_ahead, plant_hint)?;
        plant_hint = proj.s_star;

        let v_plant = plant.speed(v);
        if i < prep.steps {
            let delta_in = input_line.push(delta_cmd);
            delta_act = plant.advance(delta_in, v, dt)?;
        }
        rows.push(TraceRow {
            t,
            state: pose,
            v: v_plant,
            e: proj.e_signed,
            s_star: proj.s_star,
            y_del,
            y_hat,
            delta_cmd,
            delta_act,
            lookahead_fallback: out.lookahead_fallback,
            queue_newest: compensator.queue().newest_shifted_position(),
            model_pose: compensator.queue().model_pose(),
        });
    }

    Ok(SimTrace {
        config: cfg.clone(),
        rows,
    })
}
