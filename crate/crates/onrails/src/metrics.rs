//! Scoring: driving score with multiplicative infraction penalties, route
//! termination, comfort and efficiency measures, and the per-category
//! success rules for dream-sample evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dreamer::{DreamMode, DreamSample};
use crate::geom::{distance_to_polyline, project_onto_polyline, regression_slope, Vec2};
use crate::scene::{target_speed_from_wps, SceneError, Trajectory};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty point sequence")]
    EmptySequence,
    #[error("kinematics traces have inconsistent lengths")]
    MissingTrace,
    #[error("trajectories have incomparable horizons: {0}")]
    IncomparableHorizons(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfractionKind {
    PedestrianCollision,
    VehicleCollision,
    StaticCollision,
    RedLight,
    StopSign,
    EmergencyYield,
    MinSpeed,
    OffRoad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfractionEvent {
    pub kind: InfractionKind,
    pub timestamp: f64,
    /// Arc position along the route where the event occurred, meters.
    pub route_s: f64,
    /// Severity in [0, 1] for graded penalties (minimum-speed deficit).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl InfractionEvent {
    pub fn new(kind: InfractionKind, timestamp: f64, route_s: f64) -> Self {
        Self {
            kind,
            timestamp,
            route_s,
            severity: None,
            detail: None,
        }
    }
}

/// Penalty coefficient per infraction type. The minimum-speed penalty is a
/// bound: the effective coefficient interpolates between 1.0 and the table
/// value by the event's severity (deficit fraction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyTable {
    pub pedestrian_collision: f64,
    pub vehicle_collision: f64,
    pub static_collision: f64,
    pub red_light: f64,
    pub stop_sign: f64,
    pub emergency_yield: f64,
    pub min_speed: f64,
}

impl Default for PenaltyTable {
    fn default() -> Self {
        Self {
            pedestrian_collision: 0.50,
            vehicle_collision: 0.60,
            static_collision: 0.65,
            red_light: 0.70,
            stop_sign: 0.80,
            emergency_yield: 0.70,
            min_speed: 0.70,
        }
    }
}

impl PenaltyTable {
    /// Coefficient applied for one occurrence of the event. Off-road events
    /// carry no multiplicative penalty (they reduce route completion).
    pub fn coefficient(&self, event: &InfractionEvent) -> f64 {
        match event.kind {
            InfractionKind::PedestrianCollision => self.pedestrian_collision,
            InfractionKind::VehicleCollision => self.vehicle_collision,
            InfractionKind::StaticCollision => self.static_collision,
            InfractionKind::RedLight => self.red_light,
            InfractionKind::StopSign => self.stop_sign,
            InfractionKind::EmergencyYield => self.emergency_yield,
            InfractionKind::MinSpeed => {
                let severity = event.severity.unwrap_or(1.0).clamp(0.0, 1.0);
                1.0 + severity * (self.min_speed - 1.0)
            }
            InfractionKind::OffRoad => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Finished,
    RouteDeviation,
    Blocked,
    CommTimeout,
    RouteTimeout,
}

/// Per-tick kinematic measurements of a completed route.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicsTrace {
    pub speed: Vec<f64>,
    pub long_accel: Vec<f64>,
    pub lat_accel: Vec<f64>,
    pub jerk_mag: Vec<f64>,
    pub long_jerk: Vec<f64>,
    pub yaw_rate: Vec<f64>,
    pub yaw_accel: Vec<f64>,
}

impl KinematicsTrace {
    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    fn consistent(&self) -> bool {
        let n = self.speed.len();
        [
            self.long_accel.len(),
            self.lat_accel.len(),
            self.jerk_mag.len(),
            self.long_jerk.len(),
            self.yaw_rate.len(),
            self.yaw_accel.len(),
        ]
        .iter()
        .all(|&l| l == n)
    }
}

/// A completed route's progress and infraction record, the input to scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRun {
    pub id: String,
    pub route_length: f64,
    pub completed_length: f64,
    /// Driven arc length spent outside all driving lanes.
    #[serde(default)]
    pub offroad_length: f64,
    #[serde(default)]
    pub infractions: Vec<InfractionEvent>,
    pub termination: Termination,
    #[serde(default)]
    pub kinematics: KinematicsTrace,
    /// Mean speed of surrounding actors per tick; None when no actor is near.
    #[serde(default)]
    pub surrounding_speed: Vec<Option<f64>>,
}

/// Multiplicative infraction score starting from a base of 1.0.
pub fn infraction_score(events: &[InfractionEvent], table: &PenaltyTable) -> f64 {
    events.iter().map(|e| table.coefficient(e)).product()
}

/// Route completion percentage, reduced proportionally by off-road driving.
pub fn route_completion(run: &RouteRun) -> f64 {
    if run.route_length <= 0.0 {
        return 0.0;
    }
    let effective = run.completed_length - run.offroad_length;
    (100.0 * effective / run.route_length).clamp(0.0, 100.0)
}

/// Driving score on a 0-100 scale: route completion times infraction score.
pub fn driving_score(run: &RouteRun, table: &PenaltyTable) -> f64 {
    route_completion(run) * infraction_score(&run.infractions, table)
}

/// Arc progress along the dense route achieved by a driven position trace,
/// using monotone projection.
pub fn completed_length_from_trace(positions: &[Vec2], route: &[Vec2]) -> f64 {
    let mut s = 0.0;
    for p in positions {
        s = project_onto_polyline(route, *p, s);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerminationLimits {
    /// Route deviation threshold, meters off the route.
    pub max_deviation: f64,
    /// Seconds without progress before the agent counts as blocked.
    pub blocked_timeout: f64,
    /// Allotted simulation time, seconds (None = unlimited).
    pub route_timeout: Option<f64>,
}

impl Default for TerminationLimits {
    fn default() -> Self {
        Self {
            max_deviation: 30.0,
            blocked_timeout: 180.0,
            route_timeout: None,
        }
    }
}

/// A timed position trace of a driven route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveTrace {
    pub timestamps: Vec<f64>,
    pub positions: Vec<Vec2>,
}

/// First termination event triggered by the trace, else `Finished`.
pub fn check_termination(
    trace: &DriveTrace,
    route: &[Vec2],
    limits: &TerminationLimits,
) -> Termination {
    let mut progress = 0.0;
    let mut last_progress_t = trace.timestamps.first().copied().unwrap_or(0.0);
    for (t, p) in trace.timestamps.iter().zip(&trace.positions) {
        if let Some(timeout) = limits.route_timeout {
            if *t > timeout {
                return Termination::RouteTimeout;
            }
        }
        if distance_to_polyline(route, *p) > limits.max_deviation {
            return Termination::RouteDeviation;
        }
        let s = project_onto_polyline(route, *p, progress);
        if s > progress + 0.1 {
            progress = s;
            last_progress_t = *t;
        } else if *t - last_progress_t > limits.blocked_timeout {
            return Termination::Blocked;
        }
    }
    Termination::Finished
}

/// Comfort thresholds on route-mean kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComfortThresholds {
    pub max_jerk: f64,
    pub max_lat_accel: f64,
    pub max_long_accel: f64,
    pub min_long_accel: f64,
    pub max_yaw_accel: f64,
    pub max_long_jerk: f64,
    pub max_yaw_rate: f64,
}

impl Default for ComfortThresholds {
    fn default() -> Self {
        Self {
            max_jerk: 8.37,
            max_lat_accel: 4.89,
            max_long_accel: 2.40,
            min_long_accel: -4.05,
            max_yaw_accel: 1.93,
            max_long_jerk: 4.13,
            max_yaw_rate: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComfortReport {
    pub jerk: bool,
    pub lat_accel: bool,
    pub long_accel: bool,
    pub yaw_accel: bool,
    pub long_jerk: bool,
    pub yaw_rate: bool,
    pub overall: bool,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn mean_abs(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64
    }
}

/// Per-dimension comfort verdicts on the route-mean of each measure.
pub fn comfortness(
    run: &RouteRun,
    thresholds: &ComfortThresholds,
) -> Result<ComfortReport, MetricsError> {
    let k = &run.kinematics;
    if k.is_empty() || !k.consistent() {
        return Err(MetricsError::MissingTrace);
    }
    let long_accel_mean = mean(&k.long_accel);
    let report = ComfortReport {
        jerk: mean_abs(&k.jerk_mag) <= thresholds.max_jerk,
        lat_accel: mean_abs(&k.lat_accel) <= thresholds.max_lat_accel,
        long_accel: long_accel_mean <= thresholds.max_long_accel
            && long_accel_mean >= thresholds.min_long_accel,
        yaw_accel: mean_abs(&k.yaw_accel) <= thresholds.max_yaw_accel,
        long_jerk: mean_abs(&k.long_jerk) <= thresholds.max_long_jerk,
        yaw_rate: mean_abs(&k.yaw_rate) <= thresholds.max_yaw_rate,
        overall: false,
    };
    Ok(ComfortReport {
        overall: report.jerk
            && report.lat_accel
            && report.long_accel
            && report.yaw_accel
            && report.long_jerk
            && report.yaw_rate,
        ..report
    })
}

const EFFICIENCY_SPEED_FLOOR: f64 = 0.1;

/// Mean ratio of ego speed to surrounding actor speed, times 100.
/// Ticks with no surrounding actors are skipped; `None` when no tick has any.
pub fn efficiency(run: &RouteRun) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, s) in run.kinematics.speed.iter().zip(&run.surrounding_speed) {
        if let Some(surround) = s {
            sum += v / surround.max(EFFICIENCY_SPEED_FLOOR);
            count += 1;
        }
    }
    (count > 0).then(|| 100.0 * sum / count as f64)
}

/// Bench2Drive-style route success: finished without any infraction other
/// than minimum-speed events.
pub fn route_success(run: &RouteRun) -> bool {
    run.termination == Termination::Finished
        && run
            .infractions
            .iter()
            .all(|e| e.kind == InfractionKind::MinSpeed)
}

/// Average displacement error: mean pointwise distance after truncating to
/// the shorter sequence.
pub fn ade(a: &[Vec2], b: &[Vec2]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    let n = a.len().min(b.len());
    Ok(a.iter()
        .zip(b.iter())
        .take(n)
        .map(|(p, q)| p.distance(*q))
        .sum::<f64>()
        / n as f64)
}

/// Early-stopping gate: stop once the traveled distance passed the
/// threshold and the wheel is close to straight.
pub fn early_stop_gate(traveled: f64, steer: f64, threshold: f64, steer_eps: f64) -> bool {
    debug_assert!(threshold > 0.0);
    traveled >= threshold && steer.abs() < steer_eps
}

/// Relative closeness: |value - reference| within `fraction` of |reference|.
fn within_fraction(value: f64, reference: f64, fraction: f64) -> bool {
    (value - reference).abs() <= fraction * reference.abs()
}

/// Per-category success rule for a predicted trajectory against a dream
/// sample. The sample carries its own generation-time context (current ego
/// speed and the expert trajectory of the frame).
pub fn dream_success(pred: &Trajectory, sample: &DreamSample) -> Result<bool, MetricsError> {
    let dt = sample.dt;
    let decode = |t: &Trajectory| -> Result<Vec<f64>, MetricsError> {
        if t.speed_wps.len() < 2 {
            return Err(MetricsError::IncomparableHorizons(format!(
                "need at least 2 speed waypoints, got {}",
                t.speed_wps.len()
            )));
        }
        Ok(t.decoded_speeds(dt))
    };
    let v = sample.ego_speed;
    match sample.mode {
        DreamMode::Slower => Ok(regression_slope(&decode(pred)?) < -0.05 * v),
        DreamMode::Faster => Ok(regression_slope(&decode(pred)?) > 0.05 * v),
        DreamMode::TargetSpeed => {
            let pred_end = target_speed_from_wps(&pred.speed_wps, dt)?;
            let dreamed_end = target_speed_from_wps(&sample.trajectory.speed_wps, dt)?;
            let instructed = sample.params.target_speed().ok_or_else(|| {
                MetricsError::IncomparableHorizons("sample lacks an instructed target speed".into())
            })?;
            Ok(within_fraction(pred_end, instructed, 0.2)
                || within_fraction(pred_end, dreamed_end, 0.2))
        }
        DreamMode::LaneChange => {
            let pred_final = pred.final_path_point().ok_or(MetricsError::EmptySequence)?;
            let dream_final = sample
                .trajectory
                .final_path_point()
                .ok_or(MetricsError::EmptySequence)?;
            let expert_final = sample
                .expert
                .final_path_point()
                .ok_or(MetricsError::EmptySequence)?;
            Ok(pred_final.distance(dream_final) < pred_final.distance(expert_final))
        }
        DreamMode::Objects => {
            let dream_vs_expert = ade(&sample.trajectory.path_wps, &sample.expert.path_wps)?;
            if dream_vs_expert > 1.0 {
                let pred_vs_expert = ade(&pred.path_wps, &sample.expert.path_wps)?;
                let pred_vs_dream = ade(&pred.path_wps, &sample.trajectory.path_wps)?;
                Ok(pred_vs_expert > pred_vs_dream)
            } else {
                let pred_vs_dream = ade(&pred.path_wps, &sample.trajectory.path_wps)?;
                let mean_pred = mean(&decode(pred)?);
                let mean_dream = mean(&decode(&sample.trajectory)?);
                Ok(pred_vs_dream < 1.0 && within_fraction(mean_pred, mean_dream, 0.3))
            }
        }
    }
}

/// Aggregate success rates per dream category plus their mean, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DreamReport {
    pub per_mode: BTreeMap<DreamMode, ModeStats>,
    pub average: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ModeStats {
    pub total: usize,
    pub successes: usize,
    pub success_rate: f64,
}

impl DreamReport {
    pub fn from_outcomes(outcomes: &[(DreamMode, bool)]) -> Self {
        let mut per_mode: BTreeMap<DreamMode, ModeStats> = BTreeMap::new();
        for (mode, ok) in outcomes {
            let stats = per_mode.entry(*mode).or_default();
            stats.total += 1;
            if *ok {
                stats.successes += 1;
            }
        }
        for stats in per_mode.values_mut() {
            stats.success_rate = 100.0 * stats.successes as f64 / stats.total as f64;
        }
        let average = if per_mode.is_empty() {
            None
        } else {
            Some(per_mode.values().map(|s| s.success_rate).sum::<f64>() / per_mode.len() as f64)
        };
        Self { per_mode, average }
    }
}
