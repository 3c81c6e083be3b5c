//! Kinematic bicycle model, PID controllers, ego forecasting under the
//! world-on-rails assumption, and oriented-box collision checks.
//!
//! All operations are pure functions of their inputs; rollouts over
//! different frames can run in parallel without shared state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{normalize_angle, point_at_arc, project_onto_polyline, Pose, Vec2};
use crate::scene::{EgoState, OrientedBox, SceneError, SceneFrame, Trajectory};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("path too short for control (need at least 2 points)")]
    PathTooShort,
    #[error("rollout of {steps} steps exceeds recorded actor horizon {horizon}")]
    HorizonExceeded { steps: usize, horizon: usize },
    #[error("speed plan covers {provided} steps, rollout needs {needed}")]
    PlanTooShort { provided: usize, needed: usize },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Gains and clamps for one PID loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral_clamp: f64,
    pub output_clamp: f64,
}

impl Default for PidConfig {
    fn default() -> Self {
        Self {
            kp: 1.0,
            ki: 0.0,
            kd: 0.0,
            integral_clamp: 1.0,
            output_clamp: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PidState {
    integral: f64,
    prev_error: Option<f64>,
}

impl PidState {
    pub fn step(&mut self, cfg: &PidConfig, error: f64, dt: f64) -> f64 {
        self.integral = (self.integral + error * dt).clamp(-cfg.integral_clamp, cfg.integral_clamp);
        let deriv = match self.prev_error {
            Some(prev) => (error - prev) / dt,
            None => 0.0,
        };
        self.prev_error = Some(error);
        (cfg.kp * error + cfg.ki * self.integral + cfg.kd * deriv)
            .clamp(-cfg.output_clamp, cfg.output_clamp)
    }
}

/// Vehicle dynamics and controller configuration.
///
/// The PID gains are declared stand-ins tuned for the convergence targets
/// of this toolkit, not reproductions of any particular expert controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    /// Control tick in seconds.
    pub dt: f64,
    /// Euler substeps per control tick.
    pub substeps: u32,
    /// Default wheelbase for synthetic egos, meters.
    pub wheelbase: f64,
    /// Steering clamp, radians.
    pub max_steer: f64,
    /// Acceleration clamp, m/s^2 (min is the full-brake value).
    pub accel_min: f64,
    pub accel_max: f64,
    /// Speed at or below which a zero target commands a full brake.
    pub stop_speed: f64,
    /// Lateral lookahead: max(lookahead_min, lookahead_time * speed).
    pub lookahead_min: f64,
    pub lookahead_time: f64,
    pub lateral_pid: PidConfig,
    pub longitudinal_pid: PidConfig,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            dt: 0.25,
            substeps: 5,
            wheelbase: 2.9,
            max_steer: 1.22,
            accel_min: -6.0,
            accel_max: 3.0,
            stop_speed: 0.1,
            lookahead_min: 2.0,
            lookahead_time: 0.5,
            lateral_pid: PidConfig {
                kp: 1.1,
                ki: 0.05,
                kd: 0.25,
                integral_clamp: 0.5,
                output_clamp: 1.22,
            },
            longitudinal_pid: PidConfig {
                kp: 2.0,
                ki: 0.3,
                kd: 0.05,
                integral_clamp: 1.5,
                output_clamp: 6.0,
            },
        }
    }
}

impl DynamicsConfig {
    pub fn lookahead(&self, speed: f64) -> f64 {
        self.lookahead_min.max(self.lookahead_time * speed)
    }
}

/// Steering and acceleration command, clamped at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlAction {
    pub steer: f64,
    pub accel: f64,
}

impl ControlAction {
    pub fn clamped(steer: f64, accel: f64, cfg: &DynamicsConfig) -> Self {
        Self {
            steer: steer.clamp(-cfg.max_steer, cfg.max_steer),
            accel: accel.clamp(cfg.accel_min, cfg.accel_max),
        }
    }
}

/// One forward-Euler step of the rear-axle kinematic bicycle model.
pub fn bicycle_step(state: &EgoState, action: &ControlAction, dt: f64) -> EgoState {
    debug_assert!(dt > 0.0 && dt <= 0.5);
    let pose = state.pose;
    let v = state.speed;
    let x = pose.x + v * pose.yaw.cos() * dt;
    let y = pose.y + v * pose.yaw.sin() * dt;
    let yaw = normalize_angle(pose.yaw + v / state.wheelbase * action.steer.tan() * dt);
    EgoState {
        pose: Pose { x, y, yaw },
        speed: (v + action.accel * dt).max(0.0),
        ..*state
    }
}

/// Advance one control tick with Euler substepping.
pub fn bicycle_advance(
    state: &EgoState,
    action: &ControlAction,
    dt: f64,
    substeps: u32,
) -> EgoState {
    let n = substeps.max(1);
    let h = dt / n as f64;
    let mut s = *state;
    for _ in 0..n {
        s = bicycle_step(&s, action, h);
    }
    s
}

/// Lateral controller: PID on the heading error toward a speed-scaled
/// lookahead point on the path. Positive steer turns left.
#[derive(Debug, Clone, Default)]
pub struct LateralPid {
    state: PidState,
    cursor: f64,
}

impl LateralPid {
    pub fn control(
        &mut self,
        path: &[Vec2],
        pose: &Pose,
        speed: f64,
        cfg: &DynamicsConfig,
    ) -> Result<f64, DynamicsError> {
        if path.len() < 2 {
            return Err(DynamicsError::PathTooShort);
        }
        let pos = pose.position();
        let s = project_onto_polyline(path, pos, self.cursor);
        self.cursor = s;
        let target = point_at_arc(path, s + cfg.lookahead(speed));
        let to_target = target - pos;
        let error = if to_target.norm() < 1e-9 {
            0.0
        } else {
            normalize_angle(to_target.y.atan2(to_target.x) - pose.yaw)
        };
        let steer = self.state.step(&cfg.lateral_pid, error, cfg.dt);
        Ok(steer.clamp(-cfg.max_steer, cfg.max_steer))
    }
}

/// One-shot lateral PID (fresh controller state).
pub fn lateral_pid(
    path: &[Vec2],
    state: &EgoState,
    cfg: &DynamicsConfig,
) -> Result<f64, DynamicsError> {
    LateralPid::default().control(path, &state.pose, state.speed, cfg)
}

/// Longitudinal controller: PID on the speed error; a target at or below
/// the stop threshold commands a full brake until the vehicle stands.
#[derive(Debug, Clone, Default)]
pub struct LongitudinalPid {
    state: PidState,
}

impl LongitudinalPid {
    pub fn control(&mut self, target: f64, current: f64, cfg: &DynamicsConfig) -> f64 {
        if target <= cfg.stop_speed {
            return if current > cfg.stop_speed {
                cfg.accel_min
            } else {
                0.0
            };
        }
        let accel = self
            .state
            .step(&cfg.longitudinal_pid, target - current, cfg.dt);
        accel.clamp(cfg.accel_min, cfg.accel_max)
    }
}

/// One-shot longitudinal PID (fresh controller state).
pub fn longitudinal_pid(target: f64, current: f64, cfg: &DynamicsConfig) -> f64 {
    LongitudinalPid::default().control(target, current, cfg)
}

/// Exact separating-axis intersection test for two oriented rectangles.
pub fn obb_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    let axes = [
        Vec2::new(a.center.yaw.cos(), a.center.yaw.sin()),
        Vec2::new(-a.center.yaw.sin(), a.center.yaw.cos()),
        Vec2::new(b.center.yaw.cos(), b.center.yaw.sin()),
        Vec2::new(-b.center.yaw.sin(), b.center.yaw.cos()),
    ];
    for axis in axes {
        let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in ca {
            let p = c.dot(axis);
            amin = amin.min(p);
            amax = amax.max(p);
        }
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in cb {
            let p = c.dot(axis);
            bmin = bmin.min(p);
            bmax = bmax.max(p);
        }
        if amax < bmin || bmax < amin {
            return false;
        }
    }
    true
}

/// Boxes of every actor at its recorded on-rails pose for `step`
/// (step 0 = current poses), independent of ego behavior.
pub fn world_on_rails_actors(
    frame: &SceneFrame,
    step: usize,
) -> Result<Vec<OrientedBox>, DynamicsError> {
    let horizon = frame.actor_horizon().unwrap_or(0);
    if !frame.actors.is_empty() && step > horizon {
        return Err(DynamicsError::HorizonExceeded {
            steps: step,
            horizon,
        });
    }
    Ok(frame.actors.iter().filter_map(|a| a.box_at(step)).collect())
}

/// Longitudinal plan for a rollout: either per-step target speeds tracked
/// by the longitudinal PID, or a direct per-step acceleration schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedPlan {
    Profile(Vec<f64>),
    AccelSchedule(Vec<f64>),
}

impl SpeedPlan {
    pub fn constant_speed(target: f64, steps: usize) -> Self {
        SpeedPlan::Profile(vec![target; steps])
    }

    fn len(&self) -> usize {
        match self {
            SpeedPlan::Profile(v) | SpeedPlan::AccelSchedule(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub actor_id: String,
    pub step: usize,
}

/// Result of an ego forecast rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    /// Poses at every control tick, index 0 being the starting pose.
    pub poses: Vec<Pose>,
    /// Speeds aligned with `poses`.
    pub speeds: Vec<f64>,
    /// First overlap with an on-rails actor, if any.
    pub collided: Option<Collision>,
    /// Temporal waypoints from the rollout, geometric waypoints from the
    /// commanded path (the path is defined even when the vehicle stands).
    pub trajectory: Trajectory,
}

impl RolloutResult {
    pub fn final_pose(&self) -> &Pose {
        self.poses.last().unwrap()
    }

    pub fn total_distance(&self) -> f64 {
        self.poses
            .windows(2)
            .map(|w| w[0].position().distance(w[1].position()))
            .sum()
    }
}

/// Roll the ego forward for `steps` control ticks along `path` under the
/// given speed plan, checking the ego footprint against every physical
/// actor's on-rails box at each tick. The first overlap is recorded and
/// the rollout continues to its full length.
pub fn forecast_ego(
    frame: &SceneFrame,
    path: &[Pose],
    plan: &SpeedPlan,
    steps: usize,
    cfg: &DynamicsConfig,
) -> Result<RolloutResult, DynamicsError> {
    if path.len() < 2 {
        return Err(DynamicsError::PathTooShort);
    }
    if plan.len() < steps {
        return Err(DynamicsError::PlanTooShort {
            provided: plan.len(),
            needed: steps,
        });
    }
    let checked: Vec<&crate::scene::ActorTrack> = frame
        .actors
        .iter()
        .filter(|a| a.class.is_physical())
        .collect();
    if !checked.is_empty() {
        let horizon = frame.actor_horizon().unwrap_or(0);
        if steps > horizon {
            return Err(DynamicsError::HorizonExceeded { steps, horizon });
        }
    }

    let positions: Vec<Vec2> = path.iter().map(|p| p.position()).collect();
    let mut lateral = LateralPid::default();
    let mut longitudinal = LongitudinalPid::default();
    let mut state = frame.ego;
    let mut poses = Vec::with_capacity(steps + 1);
    let mut speeds = Vec::with_capacity(steps + 1);
    poses.push(state.pose);
    speeds.push(state.speed);
    let mut collided = None;

    for k in 0..steps {
        let steer = lateral.control(&positions, &state.pose, state.speed, cfg)?;
        let accel = match plan {
            SpeedPlan::Profile(targets) => longitudinal.control(targets[k], state.speed, cfg),
            SpeedPlan::AccelSchedule(accels) => accels[k],
        };
        let action = ControlAction::clamped(steer, accel, cfg);
        state = bicycle_advance(&state, &action, cfg.dt, cfg.substeps);
        poses.push(state.pose);
        speeds.push(state.speed);
        if collided.is_none() {
            let ego_box = frame.ego.box_at(&state.pose);
            for actor in &checked {
                if let Some(b) = actor.box_at(k + 1) {
                    if obb_overlap(&ego_box, &b) {
                        collided = Some(Collision {
                            actor_id: actor.id.clone(),
                            step: k + 1,
                        });
                        break;
                    }
                }
            }
        }
    }

    let speed_wps: Vec<Vec2> = poses.iter().map(|p| p.position()).collect();
    let path_wps: Vec<Vec2> = crate::scene::resample_path(path, crate::scene::PATH_WP_SPACING)?
        .iter()
        .skip(1)
        .map(|p| p.position())
        .collect();
    Ok(RolloutResult {
        poses,
        speeds,
        collided,
        trajectory: Trajectory {
            speed_wps,
            path_wps,
        },
    })
}
