//! Generation of instruction-conditioned alternative ego trajectories
//! ("dream" samples): five modes per frame, safety annotation, and
//! instruction text.
//!
//! Generation is deterministic: every (frame, mode) pair gets its own RNG
//! stream derived from the master seed, so adding or toggling modes never
//! perturbs the draws of other modes, and frames can be processed in
//! parallel in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{forecast_ego, Collision, DynamicsConfig, DynamicsError, SpeedPlan};
use crate::geom::{Pose, Vec2};
use crate::scene::{LaneType, SceneFrame, Trajectory};

#[derive(Debug, Error)]
pub enum DreamError {
    #[error("ego is already stopped ({0:.2} m/s)")]
    EgoAlreadyStopped(f64),
    #[error("mode not applicable: {0}")]
    NotApplicable(&'static str),
    #[error("missing parameter for instruction: {0}")]
    MissingParam(&'static str),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DreamMode {
    Faster,
    Slower,
    TargetSpeed,
    LaneChange,
    Objects,
}

impl DreamMode {
    pub const ALL: [DreamMode; 5] = [
        DreamMode::Faster,
        DreamMode::Slower,
        DreamMode::TargetSpeed,
        DreamMode::LaneChange,
        DreamMode::Objects,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DreamMode::Faster => "faster",
            DreamMode::Slower => "slower",
            DreamMode::TargetSpeed => "target_speed",
            DreamMode::LaneChange => "lane_change",
            DreamMode::Objects => "objects",
        }
    }
}

impl std::fmt::Display for DreamMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneSide {
    Left,
    Right,
}

impl LaneSide {
    pub fn word(self) -> &'static str {
        match self {
            LaneSide::Left => "left",
            LaneSide::Right => "right",
        }
    }
}

/// Mode-specific generation parameters carried by a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DreamParams {
    Faster {
        accel: f64,
    },
    Slower,
    TargetSpeed {
        target_speed: f64,
    },
    LaneChange {
        side: LaneSide,
        lane_kind: LaneType,
        /// Signed lateral offset of the target lane center, meters.
        offset: f64,
        start_distance: f64,
        transition_length: f64,
    },
    Objects {
        actor_id: String,
        description: String,
        contact_step: usize,
        /// Speed at the contact step under the commanded ramp.
        target_speed: f64,
    },
}

impl DreamParams {
    pub fn target_speed(&self) -> Option<f64> {
        match self {
            DreamParams::TargetSpeed { target_speed }
            | DreamParams::Objects { target_speed, .. } => Some(*target_speed),
            _ => None,
        }
    }
}

/// One generated instruction-trajectory pair with its safety annotation
/// and the generation-time context needed to evaluate predictions later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DreamSample {
    pub sample_id: String,
    pub frame_id: u64,
    pub mode: DreamMode,
    pub instruction: String,
    /// Dreamer flag bit: follow the instruction vs. judge and reject it.
    pub dreamer_flag: bool,
    pub trajectory: Trajectory,
    pub safe: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<String>,
    pub params: DreamParams,
    /// First on-rails overlap in the generating rollout, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<Collision>,
    /// Ego speed at generation time, m/s.
    pub ego_speed: f64,
    /// Expert trajectory of the frame, for evaluation baselines.
    pub expert: Trajectory,
    /// Waypoint tick in seconds.
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeToggles {
    pub faster: bool,
    pub slower: bool,
    pub target_speed: bool,
    pub lane_change: bool,
    pub objects: bool,
}

impl Default for ModeToggles {
    fn default() -> Self {
        Self {
            faster: true,
            slower: true,
            target_speed: true,
            lane_change: true,
            objects: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DreamerConfig {
    /// Master seed for all per-(frame, mode) RNG streams.
    pub seed: u64,
    /// Temporal waypoints per trajectory (rollout steps + 1).
    pub speed_wp_count: usize,
    /// Geometric waypoints per trajectory.
    pub path_wp_count: usize,
    pub modes: ModeToggles,
    /// Upper bound of the random target-speed draw, m/s.
    pub max_target_speed: f64,
    /// Objects mode: maximum distance from the route, meters.
    pub objects_radius: f64,
    /// Objects mode: minimum forward distance from the ego, meters.
    pub objects_min_ahead: f64,
    /// Objects mode: admissible miss distance at the contact step, meters.
    pub objects_contact_tolerance: f64,
    /// Slower mode requires at least this much current speed, m/s.
    pub min_slower_speed: f64,
    /// Speed under which the vehicle counts as stopped, m/s.
    pub stop_speed: f64,
}

impl Default for DreamerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            speed_wp_count: crate::scene::DEFAULT_SPEED_WP_COUNT,
            path_wp_count: crate::scene::DEFAULT_PATH_WP_COUNT,
            modes: ModeToggles::default(),
            max_target_speed: 35.0,
            objects_radius: 15.0,
            objects_min_ahead: 3.0,
            objects_contact_tolerance: 1.0,
            min_slower_speed: 0.5,
            stop_speed: 0.1,
        }
    }
}

impl DreamerConfig {
    pub fn rollout_steps(&self) -> usize {
        self.speed_wp_count.saturating_sub(1).max(1)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent RNG stream for one (frame, mode) pair under a master seed.
pub fn derive_rng(master_seed: u64, frame_id: u64, mode: DreamMode) -> ChaCha8Rng {
    let mut state = master_seed ^ 0x6f6e7261696c73u64; // stream domain tag
    let mut seed = [0u8; 32];
    let words = [
        splitmix64(&mut state),
        splitmix64(&mut state) ^ frame_id,
        splitmix64(&mut state) ^ (mode as u64).wrapping_mul(0x2545f4914f6cdd1d),
        splitmix64(&mut state),
    ];
    let mut mixed = words[0] ^ words[1].rotate_left(17) ^ words[2].rotate_left(37) ^ words[3];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut mixed).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn sample_id(frame_id: u64, mode: DreamMode, ordinal: usize) -> String {
    format!("{frame_id:08}-{mode}-{ordinal:02}")
}

fn format_speed(v: f64) -> String {
    let rounded = (v * 10.0).round() / 10.0;
    format!("{rounded}")
}

/// Deterministic-under-seed instruction phrasing for a mode and its params.
pub fn instruction_text(
    mode: DreamMode,
    params: &DreamParams,
    rng: &mut ChaCha8Rng,
) -> Result<String, DreamError> {
    let pick = |rng: &mut ChaCha8Rng, n: usize| rng.random_range(0..n);
    match (mode, params) {
        (DreamMode::Faster, DreamParams::Faster { .. }) => {
            let templates = [
                "Accelerate.",
                "Speed up.",
                "Go faster.",
                "Increase your speed.",
            ];
            Ok(templates[pick(rng, templates.len())].to_string())
        }
        (DreamMode::Slower, DreamParams::Slower) => {
            let templates = ["Slow down.", "Decelerate.", "Reduce your speed.", "Brake."];
            Ok(templates[pick(rng, templates.len())].to_string())
        }
        (DreamMode::TargetSpeed, DreamParams::TargetSpeed { target_speed }) => {
            let v = format_speed(*target_speed);
            let templates = [
                format!("Drive at {v} m/s."),
                format!("Reach a speed of {v} m/s."),
                format!("Adjust your speed to {v} m/s."),
            ];
            Ok(templates[pick(rng, templates.len())].clone())
        }
        (
            DreamMode::LaneChange,
            DreamParams::LaneChange {
                side, lane_kind, ..
            },
        ) => {
            let s = side.word();
            let templates: [String; 3] = match lane_kind {
                LaneType::Sidewalk => [
                    format!("Drive onto the sidewalk on your {s}."),
                    format!("Move onto the {s} sidewalk."),
                    format!("Pull onto the sidewalk to your {s}."),
                ],
                LaneType::Parking => [
                    format!("Pull over onto the parking lane on your {s}."),
                    format!("Move onto the parking lane to your {s}."),
                    format!("Park on the {s} side of the road."),
                ],
                _ => [
                    format!("Change to the {s} lane."),
                    format!("Move one lane to the {s}."),
                    format!("Make a lane change to the {s}."),
                ],
            };
            Ok(templates[pick(rng, templates.len())].clone())
        }
        (DreamMode::Objects, DreamParams::Objects { description, .. }) => {
            let templates = [
                format!("Drive towards the {description}."),
                format!("Head towards the {description}."),
                format!("Drive into the {description}."),
                format!("Crash into the {description}."),
            ];
            Ok(templates[pick(rng, templates.len())].clone())
        }
        _ => Err(DreamError::MissingParam("params do not match mode")),
    }
}

/// Lateral smoothstep blend of a path onto a parallel offset. The offset
/// ramps from zero at arc `s0` to `offset` at `s0 + length` and holds; the
/// smoothstep profile keeps the heading continuous at both knots.
pub fn blend_lateral(path: &[Pose], offset: f64, s0: f64, length: f64) -> Vec<Pose> {
    debug_assert!(length > 0.0);
    let mut out = Vec::with_capacity(path.len());
    let mut s = 0.0;
    let mut prev: Option<Vec2> = None;
    for p in path {
        let pos = p.position();
        if let Some(q) = prev {
            s += q.distance(pos);
        }
        prev = Some(pos);
        let r = ((s - s0) / length).clamp(0.0, 1.0);
        let ramp = r * r * (3.0 - 2.0 * r);
        let normal = Vec2::new(-p.yaw.sin(), p.yaw.cos());
        let shifted = pos + normal * (offset * ramp);
        out.push(Pose::new(shifted.x, shifted.y, p.yaw));
    }
    // recompute headings from the shifted geometry
    for i in 0..out.len() {
        let (a, b) = if i + 1 < out.len() {
            (out[i].position(), out[i + 1].position())
        } else {
            (out[i - 1].position(), out[i].position())
        };
        let d = b - a;
        if d.norm() > 1e-9 {
            out[i].yaw = d.y.atan2(d.x);
        }
    }
    out
}

/// Bend a path so it passes through `target`, ramping the lateral offset
/// from the path start up to the target's arc position and holding after.
fn bend_through(path: &[Pose], target: Vec2) -> (Vec<Pose>, f64) {
    let positions: Vec<Vec2> = path.iter().map(|p| p.position()).collect();
    let s_t = crate::geom::project_onto_polyline(&positions, target, 0.0);
    let on_path = crate::geom::point_at_arc(&positions, s_t);
    let delta = target - on_path;
    // signed lateral offset relative to the local path heading
    let yaw = crate::geom::point_at_arc(&positions, (s_t - 0.2).max(0.0));
    let tangent = on_path - yaw;
    let offset = if tangent.norm() > 1e-9 {
        let normal = Vec2::new(-tangent.y, tangent.x) * (1.0 / tangent.norm());
        delta.dot(normal)
    } else {
        delta.norm()
    };
    let bent = blend_lateral(path, offset, 0.0, s_t.max(1.0));
    (bent, s_t)
}

fn truncate_path_wps(mut trajectory: Trajectory, n: usize) -> Trajectory {
    trajectory.path_wps.truncate(n);
    trajectory
}

fn base_sample(
    frame: &SceneFrame,
    mode: DreamMode,
    ordinal: usize,
    params: DreamParams,
    rollout: crate::dynamics::RolloutResult,
    cfg: &DreamerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DreamSample, DreamError> {
    let dreamer_flag = rng.random_bool(0.5);
    let instruction = instruction_text(mode, &params, rng)?;
    Ok(DreamSample {
        sample_id: sample_id(frame.frame_id, mode, ordinal),
        frame_id: frame.frame_id,
        mode,
        instruction,
        dreamer_flag,
        trajectory: truncate_path_wps(rollout.trajectory, cfg.path_wp_count),
        safe: true,
        rejection_reason: None,
        params,
        collision: rollout.collided,
        ego_speed: frame.ego.speed,
        expert: frame.expert.clone(),
        dt: frame.dt_record,
    })
}

/// Faster mode: keep the original path, command a constant acceleration
/// drawn above 50% of the maximum.
pub fn gen_faster(
    frame: &SceneFrame,
    cfg: &DreamerConfig,
    dyn_cfg: &DynamicsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DreamSample, DreamError> {
    let steps = cfg.rollout_steps();
    let fraction: f64 = rng.random_range(0.5..=1.0);
    let accel = fraction * dyn_cfg.accel_max;
    let plan = SpeedPlan::AccelSchedule(vec![accel; steps]);
    let rollout = forecast_ego(frame, &frame.route.dense_path, &plan, steps, dyn_cfg)?;
    base_sample(
        frame,
        DreamMode::Faster,
        0,
        DreamParams::Faster { accel },
        rollout,
        cfg,
        rng,
    )
}

/// Slower mode: full brake on the original path.
pub fn gen_slower(
    frame: &SceneFrame,
    cfg: &DreamerConfig,
    dyn_cfg: &DynamicsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DreamSample, DreamError> {
    if frame.ego.speed <= cfg.min_slower_speed {
        return Err(DreamError::EgoAlreadyStopped(frame.ego.speed));
    }
    let steps = cfg.rollout_steps();
    let plan = SpeedPlan::AccelSchedule(vec![dyn_cfg.accel_min; steps]);
    let rollout = forecast_ego(frame, &frame.route.dense_path, &plan, steps, dyn_cfg)?;
    base_sample(
        frame,
        DreamMode::Slower,
        0,
        DreamParams::Slower,
        rollout,
        cfg,
        rng,
    )
}

/// Target-speed mode: track a uniformly drawn target on the original path.
pub fn gen_target_speed(
    frame: &SceneFrame,
    cfg: &DreamerConfig,
    dyn_cfg: &DynamicsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DreamSample, DreamError> {
    let steps = cfg.rollout_steps();
    let target: f64 = rng.random_range(0.0..=cfg.max_target_speed);
    let plan = SpeedPlan::constant_speed(target, steps);
    let rollout = forecast_ego(frame, &frame.route.dense_path, &plan, steps, dyn_cfg)?;
    base_sample(
        frame,
        DreamMode::TargetSpeed,
        0,
        DreamParams::TargetSpeed {
            target_speed: target,
        },
        rollout,
        cfg,
        rng,
    )
}

/// Lane-change mode: one sample per lane option on either side, with the
/// path blended laterally onto the target lane center. Start distance and
/// transition length are randomized, scaled with the current speed.
pub fn gen_lane_changes(
    frame: &SceneFrame,
    cfg: &DreamerConfig,
    dyn_cfg: &DynamicsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DreamSample>, DreamError> {
    if frame.in_junction() {
        return Err(DreamError::NotApplicable("frame is inside a junction"));
    }
    if frame.context.deviation_phase.is_some() {
        return Err(DreamError::NotApplicable("frame is mid lane-deviation"));
    }
    let steps = cfg.rollout_steps();
    let v = frame.ego.speed;
    let width = frame.route.lane_info.lane_width;
    let mut samples = Vec::new();
    let options = frame
        .route
        .lane_info
        .left
        .iter()
        .enumerate()
        .map(|(i, k)| (LaneSide::Left, i, *k))
        .chain(
            frame
                .route
                .lane_info
                .right
                .iter()
                .enumerate()
                .map(|(i, k)| (LaneSide::Right, i, *k)),
        );
    for (side, index, lane_kind) in options {
        let sign = match side {
            LaneSide::Left => 1.0,
            LaneSide::Right => -1.0,
        };
        let offset = sign * width * (index + 1) as f64;
        // the transition must begin inside the path-waypoint horizon, or
        // the dreamed path would be indistinguishable from lane keeping
        let visible_limit = cfg.path_wp_count as f64 * crate::scene::PATH_WP_SPACING - 1.0;
        let start_distance: f64 = rng
            .random_range(0.5 * v..=(1.5 * v).max(0.5 * v + 0.1))
            .min(visible_limit);
        let transition_length: f64 = rng
            .random_range(1.5 * v..=(3.0 * v).max(1.5 * v + 0.1))
            .max(5.0);
        let path = blend_lateral(
            &frame.route.dense_path,
            offset,
            start_distance,
            transition_length,
        );
        let plan = SpeedPlan::constant_speed(v.max(2.0), steps);
        let rollout = forecast_ego(frame, &path, &plan, steps, dyn_cfg)?;
        let params = DreamParams::LaneChange {
            side,
            lane_kind,
            offset,
            start_distance,
            transition_length,
        };
        samples.push(base_sample(
            frame,
            DreamMode::LaneChange,
            samples.len(),
            params,
            rollout,
            cfg,
            rng,
        )?);
    }
    Ok(samples)
}

/// Objects mode: for every physical actor near the route and ahead of the
/// ego, bend the route through the actor's on-rails position and command
/// the acceleration that reaches it exactly at the contact step. Samples
/// whose rollout misses the contact tolerance are discarded.
pub fn gen_objects(
    frame: &SceneFrame,
    cfg: &DreamerConfig,
    dyn_cfg: &DynamicsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DreamSample>, DreamError> {
    let steps = cfg.rollout_steps();
    let route_positions: Vec<Vec2> = frame
        .route
        .dense_path
        .iter()
        .map(|p| p.position())
        .collect();
    let ego_pos = frame.ego.pose.position();
    let heading = Vec2::new(frame.ego.pose.yaw.cos(), frame.ego.pose.yaw.sin());
    let v0 = frame.ego.speed;
    let dt = dyn_cfg.dt;
    let mut samples = Vec::new();

    for actor in &frame.actors {
        if !actor.class.is_physical() {
            continue;
        }
        let pos = actor.pose.position();
        if (pos - ego_pos).dot(heading) < cfg.objects_min_ahead {
            continue;
        }
        if crate::geom::distance_to_polyline(&route_positions, pos) > cfg.objects_radius {
            continue;
        }
        // earliest contact step at which the object's on-rails position is
        // kinematically reachable under the acceleration clamp
        let mut emitted = false;
        for k in 1..=steps.min(frame.actor_horizon().unwrap_or(steps)) {
            let Some(state) = actor.state_at(k) else {
                break;
            };
            let target = state.pose.position();
            let (bent, _) = bend_through(&frame.route.dense_path, target);
            let bent_positions: Vec<Vec2> = bent.iter().map(|p| p.position()).collect();
            let arc = crate::geom::project_onto_polyline(&bent_positions, target, 0.0);
            let t = k as f64 * dt;
            let reachable = v0 * t + 0.5 * dyn_cfg.accel_max * t * t;
            if arc > reachable {
                continue;
            }
            let accel =
                (2.0 * (arc - v0 * t) / (t * t)).clamp(dyn_cfg.accel_min, dyn_cfg.accel_max);
            let mut schedule = vec![accel; k];
            schedule.resize(steps, 0.0);
            let rollout = forecast_ego(
                frame,
                &bent,
                &SpeedPlan::AccelSchedule(schedule),
                steps,
                dyn_cfg,
            )?;
            let at_contact = rollout.poses[k].position();
            if at_contact.distance(target) > cfg.objects_contact_tolerance {
                continue;
            }
            let params = DreamParams::Objects {
                actor_id: actor.id.clone(),
                description: actor.describe(),
                contact_step: k,
                target_speed: (v0 + accel * t).max(0.0),
            };
            samples.push(base_sample(
                frame,
                DreamMode::Objects,
                samples.len(),
                params,
                rollout,
                cfg,
                rng,
            )?);
            emitted = true;
            break;
        }
        let _ = emitted;
    }
    Ok(samples)
}

fn rejection_sentence(reason: &str) -> String {
    format!("This instruction cannot be executed because it would {reason}.")
}

/// Annotate a sample's safety flag and rejection reason against the frame:
/// unsafe when the rollout collided, the target lane is a sidewalk or an
/// oncoming driving lane, or the trajectory crosses an active stop line
/// while moving.
pub fn annotate_safety(
    mut sample: DreamSample,
    frame: &SceneFrame,
    cfg: &DreamerConfig,
) -> DreamSample {
    if let Some(collision) = &sample.collision {
        let desc = frame
            .actor(&collision.actor_id)
            .map(|a| a.describe())
            .unwrap_or_else(|| "object".to_string());
        sample.safe = false;
        sample.rejection_reason = Some(rejection_sentence(&format!(
            "cause a collision with the {desc}"
        )));
        return sample;
    }
    if let DreamParams::LaneChange { lane_kind, .. } = &sample.params {
        match lane_kind {
            LaneType::Sidewalk => {
                sample.safe = false;
                sample.rejection_reason =
                    Some(rejection_sentence("take the vehicle onto the sidewalk"));
                return sample;
            }
            LaneType::DrivingOpposite => {
                sample.safe = false;
                sample.rejection_reason =
                    Some(rejection_sentence("move the vehicle into oncoming traffic"));
                return sample;
            }
            _ => {}
        }
    }
    let speeds = sample.trajectory.decoded_speeds(sample.dt);
    for line in &frame.context.stop_lines {
        let active = match line.kind {
            crate::scene::StopLineKind::RedLight => line
                .actor_id
                .as_deref()
                .and_then(|id| frame.actor(id))
                .map(|a| a.light_state == Some(crate::scene::LightState::Red))
                .unwrap_or(false),
            crate::scene::StopLineKind::StopSign => true,
        };
        if !active {
            continue;
        }
        for (i, w) in sample.trajectory.speed_wps.windows(2).enumerate() {
            if !crate::geom::segments_intersect(w[0], w[1], line.p0, line.p1) {
                continue;
            }
            let crossing_speed = speeds[i];
            let stopped_before = speeds[..i].iter().any(|s| *s < cfg.stop_speed)
                || sample.ego_speed < cfg.stop_speed;
            let violated = match line.kind {
                crate::scene::StopLineKind::RedLight => crossing_speed > cfg.stop_speed,
                crate::scene::StopLineKind::StopSign => {
                    crossing_speed > cfg.stop_speed && !stopped_before
                }
            };
            if violated {
                sample.safe = false;
                sample.rejection_reason = Some(rejection_sentence(match line.kind {
                    crate::scene::StopLineKind::RedLight => "run the red traffic light",
                    crate::scene::StopLineKind::StopSign => "ignore the stop sign",
                }));
                return sample;
            }
        }
    }
    sample
}

/// Generate all enabled modes for one frame, annotate safety, and return
/// the samples in a deterministic order. Mode preconditions that do not
/// hold (stopped ego, junction frames) skip the mode silently.
pub fn generate_frame(
    frame: &SceneFrame,
    cfg: &DreamerConfig,
    dyn_cfg: &DynamicsConfig,
) -> Result<Vec<DreamSample>, DreamError> {
    let mut out = Vec::new();
    let mut push = |s: DreamSample| out.push(annotate_safety(s, frame, cfg));
    if cfg.modes.faster {
        let mut rng = derive_rng(cfg.seed, frame.frame_id, DreamMode::Faster);
        push(gen_faster(frame, cfg, dyn_cfg, &mut rng)?);
    }
    if cfg.modes.slower {
        let mut rng = derive_rng(cfg.seed, frame.frame_id, DreamMode::Slower);
        match gen_slower(frame, cfg, dyn_cfg, &mut rng) {
            Ok(s) => push(s),
            Err(DreamError::EgoAlreadyStopped(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if cfg.modes.target_speed {
        let mut rng = derive_rng(cfg.seed, frame.frame_id, DreamMode::TargetSpeed);
        push(gen_target_speed(frame, cfg, dyn_cfg, &mut rng)?);
    }
    if cfg.modes.lane_change {
        let mut rng = derive_rng(cfg.seed, frame.frame_id, DreamMode::LaneChange);
        match gen_lane_changes(frame, cfg, dyn_cfg, &mut rng) {
            Ok(s) => s.into_iter().for_each(&mut push),
            Err(DreamError::NotApplicable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if cfg.modes.objects {
        let mut rng = derive_rng(cfg.seed, frame.frame_id, DreamMode::Objects);
        gen_objects(frame, cfg, dyn_cfg, &mut rng)?
            .into_iter()
            .for_each(&mut push);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::LightState;
    use crate::synth::FrameBuilder;
    use approx::assert_relative_eq;

    fn cfgs() -> (DreamerConfig, DynamicsConfig) {
        (DreamerConfig::default(), DynamicsConfig::default())
    }

    #[test]
    fn faster_speeds_nondecreasing() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(1)
            .ego_speed(3.0)
            .straight_route(120.0)
            .build();
        let mut rng = derive_rng(0, 1, DreamMode::Faster);
        let sample = gen_faster(&frame, &cfg, &dyn_cfg, &mut rng).unwrap();
        let speeds = sample.trajectory.decoded_speeds(0.25);
        for w in speeds.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "speeds {speeds:?}");
        }
        assert!(sample.safe);
    }

    #[test]
    fn faster_is_deterministic_under_seed() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(7).ego_speed(4.0).build();
        let a = gen_faster(
            &frame,
            &cfg,
            &dyn_cfg,
            &mut derive_rng(9, 7, DreamMode::Faster),
        )
        .unwrap();
        let b = gen_faster(
            &frame,
            &cfg,
            &dyn_cfg,
            &mut derive_rng(9, 7, DreamMode::Faster),
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn slower_decreases_to_stop_and_requires_motion() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(2).ego_speed(8.0).build();
        let mut rng = derive_rng(0, 2, DreamMode::Slower);
        let sample = gen_slower(&frame, &cfg, &dyn_cfg, &mut rng).unwrap();
        let speeds = sample.trajectory.decoded_speeds(0.25);
        for w in speeds.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert_relative_eq!(*speeds.last().unwrap(), 0.0, epsilon = 1e-9);

        let stopped = FrameBuilder::new(3).ego_speed(0.2).build();
        assert!(matches!(
            gen_slower(
                &stopped,
                &cfg,
                &dyn_cfg,
                &mut derive_rng(0, 3, DreamMode::Slower)
            ),
            Err(DreamError::EgoAlreadyStopped(_))
        ));
    }

    #[test]
    fn target_speed_zero_stops_and_tracking_reaches_band() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(4)
            .ego_speed(5.0)
            .straight_route(120.0)
            .build();
        // find a seed-free check by driving the generator directly
        let mut rng = derive_rng(0, 4, DreamMode::TargetSpeed);
        let sample = gen_target_speed(&frame, &cfg, &dyn_cfg, &mut rng).unwrap();
        let target = sample.params.target_speed().unwrap();
        assert!((0.0..=35.0).contains(&target));
        let end = crate::scene::target_speed_from_wps(&sample.trajectory.speed_wps, 0.25).unwrap();
        // accel-limited: cannot exceed v0 + a_max * horizon
        assert!(end <= 5.0 + dyn_cfg.accel_max * 2.5 + 1e-6);
    }

    #[test]
    fn target_speed_near_current_tracks_within_band() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(4)
            .ego_speed(6.0)
            .straight_route(120.0)
            .build();
        let steps = cfg.rollout_steps();
        let rollout = forecast_ego(
            &frame,
            &frame.route.dense_path,
            &SpeedPlan::constant_speed(6.0, steps),
            steps,
            &dyn_cfg,
        )
        .unwrap();
        let end = crate::scene::target_speed_from_wps(&rollout.trajectory.speed_wps, 0.25).unwrap();
        assert!((end - 6.0).abs() <= 1.2, "end speed {end}");
    }

    #[test]
    fn lane_change_reaches_lane_offset() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(5)
            .ego_speed(5.0)
            .straight_route(80.0)
            .lanes(vec![LaneType::DrivingSame], vec![])
            .build();
        let mut rng = derive_rng(0, 5, DreamMode::LaneChange);
        let samples = gen_lane_changes(&frame, &cfg, &dyn_cfg, &mut rng).unwrap();
        assert_eq!(samples.len(), 1);
        let DreamParams::LaneChange {
            offset,
            start_distance,
            transition_length,
            ..
        } = samples[0].params.clone()
        else {
            panic!("wrong params")
        };
        assert_relative_eq!(offset, 3.5);
        // the blended path settles on the lane center after the transition
        let blended = blend_lateral(
            &frame.route.dense_path,
            offset,
            start_distance,
            transition_length,
        );
        let last = blended.last().unwrap();
        assert_relative_eq!(last.y, 3.5, epsilon = 0.3);
        assert!(samples[0].safe);
    }

    #[test]
    fn lane_change_blend_is_heading_continuous() {
        let frame = FrameBuilder::new(0).straight_route(60.0).build();
        let blended = blend_lateral(&frame.route.dense_path, 3.5, 5.0, 12.0);
        for w in blended.windows(2) {
            let dyaw = crate::geom::normalize_angle(w[1].yaw - w[0].yaw).abs();
            assert!(dyaw < 0.06, "heading jump {dyaw}");
        }
    }

    #[test]
    fn lane_change_skips_junction_and_deviation_frames() {
        let (cfg, dyn_cfg) = cfgs();
        let in_junction = FrameBuilder::new(6)
            .lanes(vec![LaneType::DrivingSame], vec![])
            .junction(-1.0, vec![])
            .build();
        assert!(matches!(
            gen_lane_changes(
                &in_junction,
                &cfg,
                &dyn_cfg,
                &mut derive_rng(0, 6, DreamMode::LaneChange)
            ),
            Err(DreamError::NotApplicable(_))
        ));
        let deviating = FrameBuilder::new(7)
            .lanes(vec![LaneType::DrivingSame], vec![])
            .deviation(
                crate::scene::ScenarioType::ConstructionObstacle,
                crate::scene::DeviationPhase::During,
            )
            .build();
        assert!(matches!(
            gen_lane_changes(
                &deviating,
                &cfg,
                &dyn_cfg,
                &mut derive_rng(0, 7, DreamMode::LaneChange)
            ),
            Err(DreamError::NotApplicable(_))
        ));
    }

    #[test]
    fn objects_filters_and_reaches_target() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(8)
            .ego_speed(5.0)
            .straight_route(80.0)
            .cone_ahead("near", 10.0, 0.5)
            .cone_ahead("behind", 2.0, 0.0) // closer than 3 m ahead
            .cone_ahead("far_off", 20.0, 20.0) // outside the 15 m radius
            .build();
        let mut rng = derive_rng(0, 8, DreamMode::Objects);
        let samples: Vec<DreamSample> = gen_objects(&frame, &cfg, &dyn_cfg, &mut rng)
            .unwrap()
            .into_iter()
            .map(|s| annotate_safety(s, &frame, &cfg))
            .collect();
        assert_eq!(samples.len(), 1);
        let DreamParams::Objects {
            actor_id,
            contact_step,
            ..
        } = &samples[0].params
        else {
            panic!("wrong params")
        };
        assert_eq!(actor_id, "near");
        let target = frame
            .actor("near")
            .unwrap()
            .state_at(*contact_step)
            .unwrap();
        let at_contact = samples[0].trajectory.speed_wps[*contact_step];
        assert!(at_contact.distance(target.pose.position()) <= 1.0);
        // driving into a cone is not safe
        assert!(!samples[0].safe);
        assert!(samples[0]
            .rejection_reason
            .as_ref()
            .unwrap()
            .contains("traffic cone"));
    }

    #[test]
    fn objects_mode_intercepts_moving_target() {
        let (cfg, dyn_cfg) = cfgs();
        // vehicle ahead pulling away at 2 m/s: contact must use its
        // on-rails position at the contact step, not its current one
        let frame = FrameBuilder::new(13)
            .ego_speed(6.0)
            .straight_route(100.0)
            .vehicle("mover", 8.0, 2.0, 0.0, 2.0)
            .build();
        let mut rng = derive_rng(0, 13, DreamMode::Objects);
        let samples = gen_objects(&frame, &cfg, &dyn_cfg, &mut rng).unwrap();
        assert_eq!(samples.len(), 1);
        let DreamParams::Objects { contact_step, .. } = &samples[0].params else {
            panic!("wrong params")
        };
        let rails_pose = frame
            .actor("mover")
            .unwrap()
            .state_at(*contact_step)
            .unwrap()
            .pose;
        assert!(rails_pose.x > 8.0); // the target has moved
        let reached = samples[0].trajectory.speed_wps[*contact_step];
        assert!(reached.distance(rails_pose.position()) <= 1.0);
    }

    #[test]
    fn objects_mode_empty_without_eligible_targets() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(9).ego_speed(5.0).build();
        let samples = gen_objects(
            &frame,
            &cfg,
            &dyn_cfg,
            &mut derive_rng(0, 9, DreamMode::Objects),
        )
        .unwrap();
        assert!(samples.is_empty());
    }

    #[test]
    fn safety_flags_sidewalk_and_oncoming() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(10)
            .ego_speed(5.0)
            .straight_route(80.0)
            .lanes(vec![LaneType::DrivingOpposite], vec![LaneType::Sidewalk])
            .build();
        let mut rng = derive_rng(0, 10, DreamMode::LaneChange);
        let samples: Vec<DreamSample> = gen_lane_changes(&frame, &cfg, &dyn_cfg, &mut rng)
            .unwrap()
            .into_iter()
            .map(|s| annotate_safety(s, &frame, &cfg))
            .collect();
        assert_eq!(samples.len(), 2);
        let left = samples
            .iter()
            .find(|s| {
                matches!(
                    s.params,
                    DreamParams::LaneChange {
                        side: LaneSide::Left,
                        ..
                    }
                )
            })
            .unwrap();
        assert!(!left.safe);
        assert!(left.rejection_reason.as_ref().unwrap().contains("oncoming"));
        let right = samples
            .iter()
            .find(|s| {
                matches!(
                    s.params,
                    DreamParams::LaneChange {
                        side: LaneSide::Right,
                        ..
                    }
                )
            })
            .unwrap();
        assert!(!right.safe);
        assert!(right
            .rejection_reason
            .as_ref()
            .unwrap()
            .contains("sidewalk"));
    }

    #[test]
    fn objects_onto_pedestrian_rejected_with_class() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(14)
            .ego_speed(5.0)
            .straight_route(80.0)
            .pedestrian("walker", 9.0, 0.5, 0.0, 0.0)
            .build();
        let mut rng = derive_rng(0, 14, DreamMode::Objects);
        let samples: Vec<DreamSample> = gen_objects(&frame, &cfg, &dyn_cfg, &mut rng)
            .unwrap()
            .into_iter()
            .map(|s| annotate_safety(s, &frame, &cfg))
            .collect();
        assert_eq!(samples.len(), 1);
        assert!(!samples[0].safe);
        let reason = samples[0].rejection_reason.as_ref().unwrap();
        assert!(
            reason.contains("collision") && reason.contains("pedestrian"),
            "{reason}"
        );
    }

    #[test]
    fn safety_flags_red_light_crossing() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(11)
            .ego_speed(6.0)
            .straight_route(80.0)
            .traffic_light("tl", 8.0, LightState::Red)
            .build();
        let mut rng = derive_rng(0, 11, DreamMode::Faster);
        let sample = gen_faster(&frame, &cfg, &dyn_cfg, &mut rng).unwrap();
        let sample = annotate_safety(sample, &frame, &cfg);
        assert!(!sample.safe);
        assert!(sample
            .rejection_reason
            .as_ref()
            .unwrap()
            .contains("red traffic light"));

        // green light: same maneuver is fine
        let green = FrameBuilder::new(12)
            .ego_speed(6.0)
            .straight_route(80.0)
            .traffic_light("tl", 8.0, LightState::Green)
            .build();
        let mut rng = derive_rng(0, 12, DreamMode::Faster);
        let ok = annotate_safety(
            gen_faster(&green, &cfg, &dyn_cfg, &mut rng).unwrap(),
            &green,
            &cfg,
        );
        assert!(ok.safe && ok.rejection_reason.is_none());
    }

    #[test]
    fn instruction_text_examples() {
        let mut rng = derive_rng(0, 0, DreamMode::LaneChange);
        let text = instruction_text(
            DreamMode::LaneChange,
            &DreamParams::LaneChange {
                side: LaneSide::Left,
                lane_kind: LaneType::DrivingSame,
                offset: 3.5,
                start_distance: 3.0,
                transition_length: 8.0,
            },
            &mut rng,
        )
        .unwrap();
        assert!(text.contains("left"), "{text}");

        let mut rng = derive_rng(0, 0, DreamMode::TargetSpeed);
        let text = instruction_text(
            DreamMode::TargetSpeed,
            &DreamParams::TargetSpeed { target_speed: 12.0 },
            &mut rng,
        )
        .unwrap();
        assert!(text.contains("12") && text.contains("m/s"), "{text}");

        // stable under the same stream
        let a = instruction_text(
            DreamMode::Slower,
            &DreamParams::Slower,
            &mut derive_rng(3, 1, DreamMode::Slower),
        )
        .unwrap();
        let b = instruction_text(
            DreamMode::Slower,
            &DreamParams::Slower,
            &mut derive_rng(3, 1, DreamMode::Slower),
        )
        .unwrap();
        assert_eq!(a, b);

        assert!(matches!(
            instruction_text(
                DreamMode::Faster,
                &DreamParams::Slower,
                &mut derive_rng(0, 0, DreamMode::Faster)
            ),
            Err(DreamError::MissingParam(_))
        ));
    }

    #[test]
    fn generate_frame_is_reproducible() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(20)
            .ego_speed(5.0)
            .straight_route(80.0)
            .lanes(vec![LaneType::DrivingSame], vec![LaneType::Parking])
            .cone_ahead("c", 12.0, 1.0)
            .build();
        let a = generate_frame(&frame, &cfg, &dyn_cfg).unwrap();
        let b = generate_frame(&frame, &cfg, &dyn_cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        // every emitted trajectory satisfies the spacing invariants
        for s in &a {
            s.trajectory.validate().unwrap();
            if !s.safe {
                assert!(s.rejection_reason.is_some());
            }
        }
    }

    #[test]
    fn mode_streams_are_independent() {
        let (cfg, dyn_cfg) = cfgs();
        let frame = FrameBuilder::new(21)
            .ego_speed(5.0)
            .lanes(vec![LaneType::DrivingSame], vec![])
            .build();
        let full = generate_frame(&frame, &cfg, &dyn_cfg).unwrap();
        let mut no_faster = cfg.clone();
        no_faster.modes.faster = false;
        let rest = generate_frame(&frame, &no_faster, &dyn_cfg).unwrap();
        // disabling one mode leaves every other sample byte-identical
        for s in &rest {
            let full_match = full.iter().find(|f| f.sample_id == s.sample_id).unwrap();
            assert_eq!(
                serde_json::to_string(s).unwrap(),
                serde_json::to_string(full_match).unwrap()
            );
        }
    }
}
