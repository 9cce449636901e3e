//! Scenario description files (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compensator::CompensatorConfig;
use crate::controllers::{Controller, DubinsRobustParams, PurePursuitParams, StanleyParams};
use crate::delay::delay_steps;
use crate::error::{Error, Result};
use crate::geometry::{ReferencePath, SegmentSpec, Vec2};
use crate::vehicle_models::{DynParams, KinematicParams, PacejkaCoeffs, SteeringFilter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub dt_s: f64,
    pub duration_s: f64,
    /// Seeds the optional feedback noise; irrelevant when noise is off.
    #[serde(default)]
    pub seed: u64,
    pub plant: PlantConfig,
    #[serde(default)]
    pub initial_pose: PoseConfig,
    pub speed: SpeedProfile,
    #[serde(default)]
    pub delays: DelayConfig,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub compensator: CompensatorSection,
    pub path: PathConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlantConfig {
    Kinematic(KinematicPlantConfig),
    Kinetic(KineticPlantConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicPlantConfig {
    pub wheelbase_m: f64,
    pub delta_max_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticPlantConfig {
    pub wheelbase_m: f64,
    pub dist_cg_front_m: f64,
    pub dist_cg_rear_m: f64,
    pub mass_kg: f64,
    pub yaw_inertia_kgm2: f64,
    pub cg_height_m: f64,
    pub delta_max_rad: f64,
    pub speed_lag_s: f64,
    /// Time constant of each of the three steering lag stages.
    pub steering_tau_s: f64,
    /// When false the commanded angle reaches the wheels without lag.
    pub steering_filter: bool,
    pub pacejka_front: PacejkaCoeffs,
    pub pacejka_rear: PacejkaCoeffs,
}

impl Default for KineticPlantConfig {
    fn default() -> Self {
        let p = DynParams::default();
        Self {
            wheelbase_m: p.wheelbase_l,
            dist_cg_front_m: p.dist_cg_front,
            dist_cg_rear_m: p.dist_cg_rear,
            mass_kg: p.mass,
            yaw_inertia_kgm2: p.yaw_inertia,
            cg_height_m: p.cg_height,
            delta_max_rad: p.delta_max,
            speed_lag_s: p.speed_lag,
            steering_tau_s: 0.05,
            steering_filter: true,
            pacejka_front: p.pacejka_front,
            pacejka_rear: p.pacejka_rear,
        }
    }
}

impl KineticPlantConfig {
    pub fn dyn_params(&self) -> DynParams {
        DynParams {
            wheelbase_l: self.wheelbase_m,
            dist_cg_front: self.dist_cg_front_m,
            dist_cg_rear: self.dist_cg_rear_m,
            mass: self.mass_kg,
            yaw_inertia: self.yaw_inertia_kgm2,
            cg_height: self.cg_height_m,
            pacejka_front: self.pacejka_front,
            pacejka_rear: self.pacejka_rear,
            delta_max: self.delta_max_rad,
            speed_lag: self.speed_lag_s,
        }
    }
}

impl PlantConfig {
    pub fn wheelbase(&self) -> f64 {
        match self {
            PlantConfig::Kinematic(k) => k.wheelbase_m,
            PlantConfig::Kinetic(k) => k.wheelbase_m,
        }
    }

    pub fn delta_max(&self) -> f64 {
        match self {
            PlantConfig::Kinematic(k) => k.delta_max_rad,
            PlantConfig::Kinetic(k) => k.delta_max_rad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseConfig {
    pub x_m: f64,
    pub y_m: f64,
    pub psi_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedProfile {
    Constant {
        v_mps: f64,
    },
    /// Linear change from `v0_mps` to `v1_mps` starting at `ramp_start_s`.
    Ramp {
        v0_mps: f64,
        v1_mps: f64,
        #[serde(default)]
        ramp_start_s: f64,
        ramp_duration_s: f64,
    },
}

impl SpeedProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            SpeedProfile::Constant { v_mps } => v_mps,
            SpeedProfile::Ramp {
                v0_mps,
                v1_mps,
                ramp_start_s,
                ramp_duration_s,
            } => {
                let f = ((t - ramp_start_s) / ramp_duration_s).clamp(0.0, 1.0);
                v0_mps + (v1_mps - v0_mps) * f
            }
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            SpeedProfile::Constant { v_mps } => v_mps,
            SpeedProfile::Ramp { v0_mps, v1_mps, .. } => v0_mps.max(v1_mps),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            SpeedProfile::Constant { v_mps } if !ok(v_mps) => {
                Err(Error::config("speed.v_mps", "must be a non-negative speed"))
            }
            SpeedProfile::Ramp { v0_mps, v1_mps, .. } if !(ok(v0_mps) && ok(v1_mps)) => {
                Err(Error::config("speed.v0_mps", "speeds must be non-negative"))
            }
            SpeedProfile::Ramp { ramp_duration_s, .. } if !(ramp_duration_s > 0.0) => {
                Err(Error::config("speed.ramp_duration_s", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Dead times in the loop. `constant_dead_time_s` is split between the two
/// sides, the input side taking the smaller half when the step count is odd.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayConfig {
    pub input_s: f64,
    pub output_s: f64,
    pub constant_dead_time_s: f64,
}

impl DelayConfig {
    /// `(k_input, k_output)` in control steps.
    pub fn steps(&self, dt: f64) -> Result<(usize, usize)> {
        let k_in = delay_steps(self.input_s, dt, "delays.input_s")?;
        let k_out = delay_steps(self.output_s, dt, "delays.output_s")?;
        let k_const = delay_steps(self.constant_dead_time_s, dt, "delays.constant_dead_time_s")?;
        Ok((k_in + k_const / 2, k_out + k_const - k_const / 2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    Stanley {
        gain_k: f64,
    },
    PurePursuit {
        lookahead_m: f64,
    },
    DubinsRobust {
        k_rob: f64,
        /// Defaults to the plant's steering limit.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_bar_rad: Option<f64>,
        #[serde(default = "default_boundary_layer")]
        boundary_layer_m: f64,
    },
}

fn default_boundary_layer() -> f64 {
    0.05
}

impl ControllerConfig {
    pub fn label(&self) -> &'static str {
        match self {
            ControllerConfig::Stanley { .. } => "stanley",
            ControllerConfig::PurePursuit { .. } => "pure_pursuit",
            ControllerConfig::DubinsRobust { .. } => "dubins_robust",
        }
    }

    pub fn build(&self, plant: &PlantConfig) -> Result<Controller> {
        let wheelbase_l = plant.wheelbase();
        let c = match *self {
            ControllerConfig::Stanley { gain_k } => Controller::Stanley(StanleyParams { gain_k, wheelbase_l }),
            ControllerConfig::PurePursuit { lookahead_m } => Controller::PurePursuit(PurePursuitParams {
                lookahead_lh: lookahead_m,
                wheelbase_l,
            }),
            ControllerConfig::DubinsRobust {
                k_rob,
                delta_bar_rad,
                boundary_layer_m,
            } => {
                let delta_bar = delta_bar_rad.unwrap_or(plant.delta_max());
                if delta_bar > plant.delta_max() {
                    return Err(Error::config(
                        "controller.delta_bar_rad",
                        "must not exceed the plant steering limit",
                    ));
                }
                Controller::DubinsRobust(DubinsRobustParams {
                    delta_bar,
                    k_rob,
                    boundary_layer: boundary_layer_m,
                    wheelbase_l,
                })
            }
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompensatorSection {
    pub enabled: bool,
    pub dt_hat_s: f64,
    /// Wheelbase of the prediction model; defaults to the plant's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wheelbase_hat_m: Option<f64>,
}

impl CompensatorSection {
    pub fn build(&self, plant: &PlantConfig) -> CompensatorConfig {
        CompensatorConfig {
            enabled: self.enabled,
            dt_hat: self.dt_hat_s,
            wheelbase_hat: self.wheelbase_hat_m.unwrap_or(plant.wheelbase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    #[serde(default)]
    pub start_x_m: f64,
    #[serde(default)]
    pub start_y_m: f64,
    #[serde(default)]
    pub start_heading_rad: f64,
    pub segments: Vec<SegmentSpec>,
}

impl PathConfig {
    pub fn build(&self) -> Result<ReferencePath> {
        ReferencePath::new(
            Vec2::new(self.start_x_m, self.start_y_m),
            self.start_heading_rad,
            &self.segments,
        )
    }
}

/// Thresholds of the tracking metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// |e| below which the trace counts as settled.
    pub eps_settle_m: f64,
    /// The post-reach window starts at the first |e| below this value.
    pub reach_threshold_m: f64,
    /// Length of the window inspected for sustained oscillation.
    pub window_s: f64,
    /// Excursions smaller than this do not count as sign changes.
    pub osc_floor_m: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            eps_settle_m: 0.05,
            reach_threshold_m: 0.5,
            window_s: 30.0,
            osc_floor_m: 0.005,
        }
    }
}

/// Optional Gaussian noise on the measured pose, off by default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub position_std_m: f64,
    pub heading_std_rad: f64,
}

#[derive(Serialize)]
struct BuiltinDefaults {
    kinetic_plant: KineticPlantConfig,
    metrics: MetricsConfig,
    dubins_robust: DubinsDefaults,
}

#[derive(Serialize)]
struct DubinsDefaults {
    boundary_layer_m: f64,
}

/// Built-in parameter values as TOML, in the same field names a scenario
/// file uses.
pub fn defaults_toml() -> Result<String> {
    let d = BuiltinDefaults {
        kinetic_plant: KineticPlantConfig::default(),
        metrics: MetricsConfig::default(),
        dubins_robust: DubinsDefaults {
            boundary_layer_m: default_boundary_layer(),
        },
    };
    toml::to_string(&d).map_err(|e| Error::Parse(e.to_string()))
}

/// Runtime objects derived from a validated config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub steps: usize,
    pub k_input: usize,
    pub k_output: usize,
    pub k_hat: usize,
    pub path: ReferencePath,
    pub controller: Controller,
    pub compensator: CompensatorConfig,
    pub kinematic: Option<KinematicParams>,
    /// Kinetic parameters and the steering filter, if any.
    pub kinetic: Option<(DynParams, Option<f64>)>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads and validates a scenario file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.prepare()?;
        Ok(cfg)
    }

    /// Validates the config and builds the runtime objects.
    pub fn prepare(&self) -> Result<Prepared> {
        let dt = self.dt_s;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("dt_s", "must be positive"));
        }
        let steps = delay_steps(self.duration_s, dt, "duration_s")?;
        if steps == 0 {
            return Err(Error::config("duration_s", "must cover at least one step"));
        }
        let (k_input, k_output) = self.delays.steps(dt)?;
        self.speed.validate()?;
        let pose = self.initial_pose;
        if !(pose.x_m.is_finite() && pose.y_m.is_finite() && pose.psi_rad.is_finite()) {
            return Err(Error::config("initial_pose", "must be finite"));
        }
        if !(self.noise.position_std_m >= 0.0 && self.noise.heading_std_rad >= 0.0) {
            return Err(Error::config("noise", "standard deviations must be non-negative"));
        }
        let m = &self.metrics;
        for (field, v) in [
            ("metrics.eps_settle_m", m.eps_settle_m),
            ("metrics.reach_threshold_m", m.reach_threshold_m),
            ("metrics.window_s", m.window_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, "must be positive"));
            }
        }

        let (kinematic, kinetic) = match &self.plant {
            PlantConfig::Kinematic(k) => (Some(KinematicParams::new(k.wheelbase_m, k.delta_max_rad)?), None),
            PlantConfig::Kinetic(k) => {
                let params = k.dyn_params();
                params.validate()?;
                SteeringFilter::new(k.steering_tau_s)?;
                SteeringFilter::substeps(dt)?;
                (None, Some((params, k.steering_filter.then_some(k.steering_tau_s))))
            }
        };

        let controller = self.controller.build(&self.plant)?;
        if matches!(controller, Controller::Stanley(_)) && self.speed.at(0.0) <= 0.0 {
            return Err(Error::config("speed", "Stanley control needs a positive speed"));
        }
        let compensator = self.compensator.build(&self.plant);
        if !(compensator.wheelbase_hat.is_finite() && compensator.wheelbase_hat > 0.0) {
            return Err(Error::config("compensator.wheelbase_hat_m", "must be positive"));
        }
        let k_hat = delay_steps(compensator.dt_hat, dt, "compensator.dt_hat_s")?;

        Ok(Prepared {
            steps,
            k_input,
            k_output,
            k_hat,
            path: self.path.build()?,
            controller,
            compensator,
            kinematic,
            kinetic,
        })
    }
}
