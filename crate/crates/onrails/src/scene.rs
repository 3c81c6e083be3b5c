//! Recorded-scene domain types plus scene-log ingestion and persistence.
//!
//! A scene log is UTF-8, line-delimited JSON: a schema header on line 1
//! followed by one frame record per line. All per-frame geometry is stored
//! ego-local (ego at the origin, heading along +x); `context.world_anchor`
//! carries the recorded world pose of the ego for cross-frame replay.
//! Numbers are 64-bit floats in SI units, angles in radians.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{normalize_angle, point_at_arc, polyline_length, Pose, Vec2};

/// Schema id expected on the first line of a scene log.
pub const SCENE_LOG_SCHEMA: &str = "scene-log/v1";

/// Spacing of the dense route polyline in meters.
pub const DENSE_PATH_SPACING: f64 = 0.1;
/// Tolerance on dense route spacing.
pub const DENSE_PATH_TOL: f64 = 1e-6;
/// Spacing of geometric path waypoints in meters.
pub const PATH_WP_SPACING: f64 = 1.0;
/// Tolerance on path-waypoint spacing (generators resample numerically).
pub const PATH_WP_TOL: f64 = 0.05;
/// Default number of temporal speed waypoints (2.5 s at 4 fps, including t=0).
pub const DEFAULT_SPEED_WP_COUNT: usize = 11;
/// Default number of geometric path waypoints (10 m of path).
pub const DEFAULT_PATH_WP_COUNT: usize = 10;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: invariant violation in `{field}`: {message}")]
    InvariantViolation {
        field: &'static str,
        line: usize,
        message: String,
    },
    #[error("mixed frame rates: line {line} has dt_record {found}, expected {expected}")]
    MixedFrameRates {
        line: usize,
        expected: f64,
        found: f64,
    },
    #[error("degenerate polyline: total length {length:.3} m is shorter than spacing {spacing} m")]
    DegeneratePolyline { length: f64, spacing: f64 },
    #[error("need at least two waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("path too short: arc length {length:.3} m < required {required:.3} m")]
    PathTooShort { length: f64, required: f64 },
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
}

/// Axis-aligned footprint rotated into the plane: a center pose plus
/// half extents (half length along heading, half width across it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Pose,
    pub half_extents: (f64, f64),
}

impl OrientedBox {
    pub fn new(center: Pose, half_length: f64, half_width: f64) -> Self {
        Self {
            center,
            half_extents: (half_length, half_width),
        }
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (hl, hw) = self.half_extents;
        let c = self.center.position();
        [
            c + Vec2::new(hl, hw).rotated(self.center.yaw),
            c + Vec2::new(hl, -hw).rotated(self.center.yaw),
            c + Vec2::new(-hl, -hw).rotated(self.center.yaw),
            c + Vec2::new(-hl, hw).rotated(self.center.yaw),
        ]
    }

    /// The same box with its center pose re-expressed relative to `frame`.
    pub fn placed_at(&self, frame: &Pose) -> OrientedBox {
        OrientedBox {
            center: frame.compose(&self.center),
            half_extents: self.half_extents,
        }
    }
}

/// Kinematic state of the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub pose: Pose,
    /// Current speed in m/s, nonnegative.
    pub speed: f64,
    /// Wheelbase in meters, positive.
    pub wheelbase: f64,
    /// Collision footprint in the vehicle frame (center relative to `pose`).
    pub bbox: OrientedBox,
}

impl EgoState {
    /// Collision footprint placed at the given vehicle pose.
    pub fn box_at(&self, pose: &Pose) -> OrientedBox {
        self.bbox.placed_at(pose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorClass {
    Vehicle,
    Pedestrian,
    Bicycle,
    StaticObstacle,
    TrafficLight,
    StopSign,
    EmergencyVehicle,
    Cone,
}

impl ActorClass {
    /// Whether the actor occupies road space for collision purposes.
    /// Traffic lights hang above the roadway.
    pub fn is_physical(self) -> bool {
        !matches!(self, ActorClass::TrafficLight)
    }

    /// Display name used in instruction and commentary text.
    pub fn display(self) -> &'static str {
        match self {
            ActorClass::Vehicle => "vehicle",
            ActorClass::Pedestrian => "pedestrian",
            ActorClass::Bicycle => "bicycle",
            ActorClass::StaticObstacle => "obstacle",
            ActorClass::TrafficLight => "traffic light",
            ActorClass::StopSign => "stop sign",
            ActorClass::EmergencyVehicle => "emergency vehicle",
            ActorClass::Cone => "traffic cone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightState {
    Red,
    Yellow,
    Green,
}

/// One recorded future state of an actor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorState {
    pub pose: Pose,
    pub speed: f64,
}

/// A tracked actor with its recorded future under the on-rails assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorTrack {
    pub id: String,
    pub class: ActorClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    /// Current pose (box center) and speed.
    pub pose: Pose,
    pub speed: f64,
    pub half_extents: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light_state: Option<LightState>,
    /// Recorded states for the following ticks; step k of a rollout reads
    /// index k-1 (step 0 is the current state).
    pub future: Vec<ActorState>,
}

impl ActorTrack {
    /// On-rails state at rollout step `step` (0 = now).
    pub fn state_at(&self, step: usize) -> Option<ActorState> {
        if step == 0 {
            Some(ActorState {
                pose: self.pose,
                speed: self.speed,
            })
        } else {
            self.future.get(step - 1).copied()
        }
    }

    pub fn box_at(&self, step: usize) -> Option<OrientedBox> {
        self.state_at(step).map(|s| OrientedBox {
            center: s.pose,
            half_extents: self.half_extents,
        })
    }

    /// Human-readable description, e.g. "red SUV" or "traffic cone".
    pub fn describe(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        if let Some(color) = &self.color {
            parts.push(color);
        }
        match (&self.subtype, self.class) {
            (
                Some(sub),
                ActorClass::Vehicle | ActorClass::EmergencyVehicle | ActorClass::Pedestrian,
            ) => parts.push(sub),
            _ => parts.push(self.class.display()),
        }
        parts.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hlc {
    FollowLane,
    TurnLeft,
    TurnRight,
    GoStraight,
    LaneChangeLeft,
    LaneChangeRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneType {
    DrivingSame,
    DrivingOpposite,
    Parking,
    Sidewalk,
}

impl LaneType {
    pub fn display(self) -> &'static str {
        match self {
            LaneType::DrivingSame => "driving lane",
            LaneType::DrivingOpposite => "oncoming lane",
            LaneType::Parking => "parking lane",
            LaneType::Sidewalk => "sidewalk",
        }
    }
}

/// Lanes adjacent to the ego lane, ordered nearest first on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneInfo {
    pub lane_width: f64,
    #[serde(default)]
    pub left: Vec<LaneType>,
    #[serde(default)]
    pub right: Vec<LaneType>,
}

impl Default for LaneInfo {
    fn default() -> Self {
        Self {
            lane_width: 3.5,
            left: Vec::new(),
            right: Vec::new(),
        }
    }
}

/// The route the ego is expected to follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSpec {
    /// Polyline of poses spaced `DENSE_PATH_SPACING` apart.
    pub dense_path: Vec<Pose>,
    #[serde(default)]
    pub target_points: Vec<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hlc: Option<Hlc>,
    #[serde(default)]
    pub lane_info: LaneInfo,
    pub total_length: f64,
}

impl RouteSpec {
    pub fn positions(&self) -> Vec<Vec2> {
        self.dense_path.iter().map(|p| p.position()).collect()
    }
}

/// Disentangled action representation: temporal speed waypoints (one per
/// 0.25 s, index 0 at t=0) and geometric path waypoints (one per meter of
/// arc length, starting one spacing ahead).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub speed_wps: Vec<Vec2>,
    pub path_wps: Vec<Vec2>,
}

impl Trajectory {
    /// Validate spacing and finiteness invariants.
    pub fn validate(&self) -> Result<(), String> {
        for w in self.speed_wps.iter().chain(self.path_wps.iter()) {
            if !w.is_finite() {
                return Err("non-finite waypoint".into());
            }
        }
        let n = self.path_wps.len();
        for (i, w) in self.path_wps.windows(2).enumerate() {
            let gap = w[0].distance(w[1]);
            let last = i + 2 == n;
            if gap > PATH_WP_SPACING + PATH_WP_TOL || (!last && gap < PATH_WP_SPACING - PATH_WP_TOL)
            {
                return Err(format!(
                    "path waypoint gap {i} is {gap:.3} m, expected {PATH_WP_SPACING} +/- {PATH_WP_TOL}"
                ));
            }
        }
        Ok(())
    }

    /// Speeds implied by consecutive speed waypoints, one per gap.
    pub fn decoded_speeds(&self, dt: f64) -> Vec<f64> {
        self.speed_wps
            .windows(2)
            .map(|w| w[0].distance(w[1]) / dt)
            .collect()
    }

    pub fn final_path_point(&self) -> Option<Vec2> {
        self.path_wps.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationPhase {
    Before,
    During,
    End,
}

/// Scenario tag recorded with a frame, when one is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioType {
    ControlLoss,
    UnprotectedLeftTurn,
    RightTurnCrossingTraffic,
    CrossingNegotiation,
    RedLightRunner,
    OncomingBicycles,
    HighwayMerge,
    HighwayCutIn,
    StaticCutIn,
    HighwayExit,
    YieldToEmergencyVehicle,
    ConstructionObstacle,
    AccidentObstacle,
    ParkedObstacle,
    DoorObstacle,
    SlowHazardAtLaneEdge,
    InvadingTurn,
    LeadVehicleBrake,
    ObstacleNoPriorAction,
    PedestrianBehindParked,
    ObstacleWithPriorAction,
    ParkingCutIn,
    ParkingExit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionActor {
    pub actor_id: String,
    pub inside: bool,
    pub stopped: bool,
    #[serde(default)]
    pub moving_away: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionContext {
    /// Distance to the junction entry in meters; <= 0 means inside.
    pub distance_to_junction: f64,
    #[serde(default)]
    pub actors: Vec<JunctionActor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdmLeader {
    pub actor_id: String,
    pub distance: f64,
    pub expert_target_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopLineKind {
    RedLight,
    StopSign,
}

/// A stop line across the route, linked to its controlling actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopLine {
    pub kind: StopLineKind,
    pub p0: Vec2,
    pub p1: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardDirection {
    Left,
    Right,
    Front,
}

/// Recorded context that is not part of the core kinematic state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FrameContext {
    #[serde(default)]
    pub world_anchor: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction: Option<JunctionContext>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idm_leader: Option<IdmLeader>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_type: Option<ScenarioType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_phase: Option<DeviationPhase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop_lines: Vec<StopLine>,
    /// Expert longitudinal acceleration at this frame, m/s^2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_accel: Option<f64>,
    /// Expert steering angle at this frame, radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_steer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle_hazard: Option<HazardDirection>,
    #[serde(default)]
    pub walker_hazard: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub town: Option<String>,
}

/// One recorded tick of the driving log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFrame {
    pub frame_id: u64,
    pub timestamp: f64,
    /// Recording tick in seconds (0.25 at 4 fps).
    pub dt_record: f64,
    pub ego: EgoState,
    #[serde(default)]
    pub actors: Vec<ActorTrack>,
    pub route: RouteSpec,
    pub expert: Trajectory,
    pub speed_limit: f64,
    #[serde(default)]
    pub context: FrameContext,
}

impl SceneFrame {
    /// Shared recorded future horizon of the frame's actors, if any.
    pub fn actor_horizon(&self) -> Option<usize> {
        self.actors.iter().map(|a| a.future.len()).min()
    }

    pub fn in_junction(&self) -> bool {
        self.context
            .junction
            .as_ref()
            .map(|j| j.distance_to_junction <= 0.0)
            .unwrap_or(false)
    }

    pub fn actor(&self, id: &str) -> Option<&ActorTrack> {
        self.actors.iter().find(|a| a.id == id)
    }

    /// Target speed the expert intends, from the IDM leader when present
    /// and otherwise decoded from the expert's last two speed waypoints.
    pub fn expert_target_speed(&self) -> f64 {
        if let Some(leader) = &self.context.idm_leader {
            leader.expert_target_speed
        } else {
            target_speed_from_wps(&self.expert.speed_wps, self.dt_record).unwrap_or(self.ego.speed)
        }
    }

    fn validate(&self, line: usize) -> Result<(), SceneError> {
        let err = |field: &'static str, message: String| SceneError::InvariantViolation {
            field,
            line,
            message,
        };
        if !(self.dt_record > 0.0) {
            return Err(err(
                "dt_record",
                format!("must be > 0, got {}", self.dt_record),
            ));
        }
        if !self.ego.pose.is_finite() || !self.ego.speed.is_finite() {
            return Err(err("ego", "non-finite state".into()));
        }
        if self.ego.speed < 0.0 {
            return Err(err(
                "ego.speed",
                format!("must be >= 0, got {}", self.ego.speed),
            ));
        }
        if !(self.ego.wheelbase > 0.0) {
            return Err(err(
                "ego.wheelbase",
                format!("must be > 0, got {}", self.ego.wheelbase),
            ));
        }
        if self.ego.bbox.half_extents.0 <= 0.0 || self.ego.bbox.half_extents.1 <= 0.0 {
            return Err(err("ego.bbox", "half extents must be positive".into()));
        }
        let horizon = self.actors.first().map(|a| a.future.len());
        for actor in &self.actors {
            if actor.speed < 0.0 || actor.future.iter().any(|s| s.speed < 0.0) {
                return Err(err(
                    "actors.speed",
                    format!("actor {} has negative speed", actor.id),
                ));
            }
            if actor.half_extents.0 <= 0.0 || actor.half_extents.1 <= 0.0 {
                return Err(err(
                    "actors.half_extents",
                    format!("actor {} has non-positive extents", actor.id),
                ));
            }
            if Some(actor.future.len()) != horizon {
                return Err(err(
                    "actors.future",
                    format!(
                        "actor {} has horizon {}, frame declares {}",
                        actor.id,
                        actor.future.len(),
                        horizon.unwrap_or(0)
                    ),
                ));
            }
        }
        if self.route.dense_path.len() < 2 {
            return Err(err("route.dense_path", "needs at least two points".into()));
        }
        for (i, w) in self.route.dense_path.windows(2).enumerate() {
            let gap = w[0].position().distance(w[1].position());
            if (gap - DENSE_PATH_SPACING).abs() > DENSE_PATH_TOL {
                return Err(err(
                    "route.dense_path",
                    format!(
                        "gap {i} is {gap:.9} m, expected {DENSE_PATH_SPACING} +/- {DENSE_PATH_TOL}"
                    ),
                ));
            }
        }
        let expected = (self.route.dense_path.len() - 1) as f64 * DENSE_PATH_SPACING;
        if (self.route.total_length - expected).abs() > 1e-6 * self.route.dense_path.len() as f64 {
            return Err(err(
                "route.total_length",
                format!("is {}, expected {expected:.6}", self.route.total_length),
            ));
        }
        if !(self.route.lane_info.lane_width > 0.0) {
            return Err(err("route.lane_info", "lane_width must be > 0".into()));
        }
        self.expert.validate().map_err(|m| err("expert", m))?;
        if !self.speed_limit.is_finite() || self.speed_limit <= 0.0 {
            return Err(err(
                "speed_limit",
                format!("must be > 0, got {}", self.speed_limit),
            ));
        }
        Ok(())
    }
}

/// An ordered, validated sequence of scene frames. Immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLog {
    pub frames: Vec<SceneFrame>,
}

impl SceneLog {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaHeader {
    schema: String,
}

/// Streaming, validating reader over a scene log. Yields frames in file
/// order with constant memory; [`load_scene_log`] builds on it.
pub struct SceneLogReader {
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    dt: Option<f64>,
    header_seen: bool,
}

impl SceneLogReader {
    pub fn open(path: &Path) -> Result<Self, SceneError> {
        Ok(Self {
            lines: BufReader::new(File::open(path)?).lines(),
            line_no: 0,
            dt: None,
            header_seen: false,
        })
    }

    fn next_frame(&mut self) -> Result<Option<SceneFrame>, SceneError> {
        loop {
            let Some(line) = self.lines.next() else {
                return Ok(None);
            };
            self.line_no += 1;
            let text = line?;
            if text.trim().is_empty() {
                continue;
            }
            if !self.header_seen {
                let header: SchemaHeader =
                    serde_json::from_str(&text).map_err(|e| SceneError::MalformedRecord {
                        line: self.line_no,
                        message: format!("schema header: {e}"),
                    })?;
                if header.schema != SCENE_LOG_SCHEMA {
                    return Err(SceneError::MalformedRecord {
                        line: self.line_no,
                        message: format!("unsupported schema `{}`", header.schema),
                    });
                }
                self.header_seen = true;
                continue;
            }
            let frame: SceneFrame =
                serde_json::from_str(&text).map_err(|e| SceneError::MalformedRecord {
                    line: self.line_no,
                    message: e.to_string(),
                })?;
            frame.validate(self.line_no)?;
            if let Some(expected) = self.dt {
                if (frame.dt_record - expected).abs() > 1e-9 {
                    return Err(SceneError::MixedFrameRates {
                        line: self.line_no,
                        expected,
                        found: frame.dt_record,
                    });
                }
            } else {
                self.dt = Some(frame.dt_record);
            }
            return Ok(Some(frame));
        }
    }
}

impl Iterator for SceneLogReader {
    type Item = Result<SceneFrame, SceneError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Load a scene log, validating every frame invariant. Frames are ordered
/// by timestamp; the first violation aborts the load with its line number.
pub fn load_scene_log(path: &Path) -> Result<SceneLog, SceneError> {
    let mut reader = SceneLogReader::open(path)?;
    let mut frames: Vec<SceneFrame> = Vec::new();
    let mut ids = BTreeSet::new();
    while let Some(frame) = reader.next_frame()? {
        if !ids.insert(frame.frame_id) {
            return Err(SceneError::InvariantViolation {
                field: "frame_id",
                line: reader.line_no,
                message: format!("duplicate frame id {}", frame.frame_id),
            });
        }
        frames.push(frame);
    }
    frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(SceneLog { frames })
}

/// Write a scene log in the line-delimited format read by [`load_scene_log`].
pub fn save_scene_log(log: &SceneLog, path: &Path) -> Result<(), SceneError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(
        &mut w,
        &SchemaHeader {
            schema: SCENE_LOG_SCHEMA.into(),
        },
    )
    .map_err(io_err)?;
    w.write_all(b"\n")?;
    for frame in &log.frames {
        serde_json::to_writer(&mut w, frame).map_err(io_err)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn io_err(e: serde_json::Error) -> SceneError {
    SceneError::Io(std::io::Error::other(e))
}

/// Resample a polyline at a fixed arc-length spacing. The first input point
/// is kept, every subsequent output lies on the input polyline `spacing`
/// meters of arc apart, and the final endpoint is kept even when the last
/// gap is partial so total length is preserved.
pub fn resample_path(polyline: &[Pose], spacing: f64) -> Result<Vec<Pose>, SceneError> {
    assert!(spacing > 0.0, "spacing must be positive");
    if polyline.len() < 2 {
        return Err(SceneError::DegeneratePolyline {
            length: 0.0,
            spacing,
        });
    }
    let pts: Vec<Vec2> = polyline.iter().map(|p| p.position()).collect();
    let total = polyline_length(&pts);
    if total < spacing {
        return Err(SceneError::DegeneratePolyline {
            length: total,
            spacing,
        });
    }
    let mut out = Vec::with_capacity((total / spacing) as usize + 2);
    let mut target = 0.0;
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let seg = w[0].distance(w[1]);
        if seg == 0.0 {
            continue;
        }
        while target <= acc + seg + 1e-12 {
            let t = ((target - acc) / seg).clamp(0.0, 1.0);
            let pos = w[0] + (w[1] - w[0]) * t;
            let yaw = (w[1].y - w[0].y).atan2(w[1].x - w[0].x);
            out.push(Pose::new(pos.x, pos.y, yaw));
            target += spacing;
        }
        acc += seg;
    }
    // keep the endpoint when the final gap is partial
    let last = pts[pts.len() - 1];
    if out
        .last()
        .map(|p| p.position().distance(last) > 1e-9)
        .unwrap_or(true)
    {
        let prev = pts[pts.len() - 2];
        let yaw = (last.y - prev.y).atan2(last.x - prev.x);
        out.push(Pose::new(last.x, last.y, yaw));
    }
    Ok(out)
}

/// Reconstruct waypoints from per-step differences: `out[k] = sum(diffs[..=k])`.
pub fn decode_waypoints(diffs: &[Vec2]) -> Result<Vec<Vec2>, SceneError> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(SceneError::NonFinite("diffs"));
    }
    let mut acc = Vec2::ZERO;
    Ok(diffs
        .iter()
        .map(|d| {
            acc = acc + *d;
            acc
        })
        .collect())
}

/// Target speed implied by the last two temporal waypoints.
pub fn target_speed_from_wps(wps: &[Vec2], dt: f64) -> Result<f64, SceneError> {
    assert!(dt > 0.0, "dt must be positive");
    if wps.len() < 2 {
        return Err(SceneError::TooFewWaypoints(wps.len()));
    }
    let n = wps.len();
    Ok(wps[n - 1].distance(wps[n - 2]) / dt)
}

/// Heading from the ego origin to the point `lookahead` meters of arc along
/// the path. Result lies in (-pi, pi].
pub fn target_angle_from_path(path: &[Vec2], lookahead: f64) -> Result<f64, SceneError> {
    let length = polyline_length(path);
    if path.len() < 2 || length < lookahead {
        return Err(SceneError::PathTooShort {
            length,
            required: lookahead,
        });
    }
    let p = point_at_arc(path, lookahead);
    Ok(normalize_angle(p.y.atan2(p.x)))
}
