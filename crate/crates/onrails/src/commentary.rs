//! Rule-based commentary labels: a route action, a speed action with its
//! reason, and an optional junction notice. Labeling is a pure function of
//! the frame; the same frame always yields the same label.

use serde::{Deserialize, Serialize};

use crate::scene::{ActorClass, DeviationPhase, LightState, ScenarioType, SceneFrame};

/// Thresholds for the speed-action classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommentaryConfig {
    /// Speed under which the vehicle counts as stopped, m/s.
    pub stop_speed: f64,
    /// Maintain band as a fraction of the speed limit.
    pub band_fraction: f64,
    /// Lower bound of the maintain band, m/s.
    pub band_min: f64,
    /// Junction notices only within this distance, meters.
    pub junction_distance: f64,
    /// Seconds the expert must remain stopped for a wait-for-gap label.
    pub wait_horizon: f64,
}

impl Default for CommentaryConfig {
    fn default() -> Self {
        Self {
            stop_speed: 0.1,
            band_fraction: 0.1,
            band_min: 0.5,
            junction_distance: 20.0,
            wait_horizon: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedAction {
    RemainStopped,
    ComeToStop,
    MaintainSpeed,
    MaintainReducedSpeed,
    IncreaseSpeed,
    SlowDown,
    WaitForGap,
}

impl SpeedAction {
    pub fn phrase(self) -> &'static str {
        match self {
            SpeedAction::RemainStopped => "Remain stopped",
            SpeedAction::ComeToStop => "Come to a stop now",
            SpeedAction::MaintainSpeed => "Maintain your current speed",
            SpeedAction::MaintainReducedSpeed => "Maintain the reduced speed",
            SpeedAction::IncreaseSpeed => "Increase your speed",
            SpeedAction::SlowDown => "Slow down",
            SpeedAction::WaitForGap => "Wait for a gap in the traffic before changing lanes",
        }
    }
}

/// A complete commentary label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentaryLabel {
    pub route_action: String,
    pub speed_action: SpeedAction,
    pub speed_reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction_notice: Option<String>,
    pub full_text: String,
}

fn deviation_template(scenario: ScenarioType) -> Option<&'static str> {
    match scenario {
        ScenarioType::ConstructionObstacle => Some("Go around the construction site."),
        ScenarioType::AccidentObstacle => Some("Go around the accident in your lane."),
        ScenarioType::ParkedObstacle => Some("Go around the parked vehicle in your lane."),
        ScenarioType::DoorObstacle => Some("Go around the vehicle with the open door."),
        ScenarioType::SlowHazardAtLaneEdge => Some("Overtake the bikes on your lane."),
        ScenarioType::YieldToEmergencyVehicle => Some("Give way to the emergency vehicle."),
        ScenarioType::InvadingTurn => Some(
            "Move slightly to the right to circumvent the oncoming cars entering your lane because of the construction cones.",
        ),
        _ => None,
    }
}

fn decapitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Route action sentence. Defaults to "Follow the route."; deviation
/// scenarios select a scenario template by phase. Unknown combinations
/// fall back to the default and are logged.
pub fn route_action(frame: &SceneFrame) -> String {
    const DEFAULT: &str = "Follow the route.";
    let Some(phase) = frame.context.deviation_phase else {
        return DEFAULT.to_string();
    };
    if phase == DeviationPhase::End {
        return "Return to your original route after avoiding the obstacle.".to_string();
    }
    let template = frame.context.scenario_type.and_then(deviation_template);
    match (template, phase) {
        (Some(t), DeviationPhase::Before) => t.to_string(),
        (Some(t), DeviationPhase::During) => {
            format!("Stay on your current lane to {}", decapitalize(t))
        }
        _ => {
            log::warn!(
                "frame {}: no deviation template for scenario {:?}, using default",
                frame.frame_id,
                frame.context.scenario_type
            );
            DEFAULT.to_string()
        }
    }
}

/// True when the expert's speed waypoints show no motion for the horizon.
fn expert_stopped_for(frame: &SceneFrame, horizon_s: f64, stop_speed: f64) -> bool {
    let gaps = (horizon_s / frame.dt_record).round() as usize;
    let speeds = frame.expert.decoded_speeds(frame.dt_record);
    speeds.len() >= gaps && speeds[..gaps].iter().all(|v| *v < stop_speed)
}

/// Classify the speed action from current speed, expert target speed, and
/// speed limit. Total: every input maps to exactly one action.
pub fn speed_action(frame: &SceneFrame, cfg: &CommentaryConfig) -> SpeedAction {
    let v = frame.ego.speed;
    let target = frame.expert_target_speed();
    let band = (cfg.band_fraction * frame.speed_limit).max(cfg.band_min);
    if frame.context.deviation_phase == Some(DeviationPhase::Before)
        && v < cfg.stop_speed
        && expert_stopped_for(frame, cfg.wait_horizon, cfg.stop_speed)
    {
        return SpeedAction::WaitForGap;
    }
    if v < cfg.stop_speed {
        return if target < cfg.stop_speed {
            SpeedAction::RemainStopped
        } else {
            SpeedAction::IncreaseSpeed
        };
    }
    if target < cfg.stop_speed {
        return SpeedAction::ComeToStop;
    }
    if (target - v).abs() <= band {
        if target < frame.speed_limit - band {
            SpeedAction::MaintainReducedSpeed
        } else {
            SpeedAction::MaintainSpeed
        }
    } else if target > v + band {
        SpeedAction::IncreaseSpeed
    } else {
        SpeedAction::SlowDown
    }
}

fn leader_position_phrase(frame: &SceneFrame, actor_id: &str) -> &'static str {
    let Some(actor) = frame.actor(actor_id) else {
        return "ahead";
    };
    let (x, y) = (actor.pose.x, actor.pose.y);
    if x >= 0.0 {
        if y > 1.5 {
            "to your front left"
        } else if y < -1.5 {
            "to your front right"
        } else {
            "in front of you"
        }
    } else if y > 0.0 {
        "to your left"
    } else {
        "to your right"
    }
}

fn leader_is_slowing(frame: &SceneFrame, actor_id: &str) -> bool {
    frame
        .actor(actor_id)
        .map(|a| {
            a.future
                .last()
                .map(|s| s.speed < a.speed - 0.5)
                .unwrap_or(false)
        })
        .unwrap_or(false)
}

fn red_light_present(frame: &SceneFrame) -> bool {
    frame
        .actors
        .iter()
        .any(|a| a.class == ActorClass::TrafficLight && a.light_state == Some(LightState::Red))
}

/// Reason phrase matched to the leading object and the speed action.
pub fn speed_reason(frame: &SceneFrame, action: SpeedAction, _cfg: &CommentaryConfig) -> String {
    const DEFAULT: &str = "to reach the target speed";
    let Some(leader) = &frame.context.idm_leader else {
        return DEFAULT.to_string();
    };
    let Some(actor) = frame.actor(&leader.actor_id) else {
        return DEFAULT.to_string();
    };
    let braking = matches!(
        action,
        SpeedAction::ComeToStop | SpeedAction::SlowDown | SpeedAction::MaintainReducedSpeed
    );
    match actor.class {
        ActorClass::TrafficLight => match actor.light_state {
            Some(LightState::Red) if braking || action == SpeedAction::RemainStopped => {
                "because of the red traffic light".to_string()
            }
            Some(LightState::Green) => "because the traffic light is green".to_string(),
            _ => DEFAULT.to_string(),
        },
        ActorClass::StopSign => match action {
            SpeedAction::RemainStopped => {
                "since you've already stopped at the stop sign".to_string()
            }
            SpeedAction::ComeToStop | SpeedAction::SlowDown => {
                "to drive closer to the stop sign".to_string()
            }
            _ => DEFAULT.to_string(),
        },
        ActorClass::Pedestrian => {
            let who = match actor.subtype.as_deref() {
                Some("child") => "child",
                _ => "pedestrian",
            };
            format!("due to the {who} crossing in front of you")
        }
        ActorClass::Vehicle | ActorClass::EmergencyVehicle | ActorClass::Bicycle => {
            let desc = actor.describe();
            if braking && leader_is_slowing(frame, &leader.actor_id) && red_light_present(frame) {
                format!("to remain behind the {desc} that is slowing down because of a red traffic light")
            } else if braking {
                let pos = leader_position_phrase(frame, &leader.actor_id);
                format!("to avoid a collision with the {desc} {pos}")
            } else {
                format!("to follow the {desc}")
            }
        }
        ActorClass::StaticObstacle | ActorClass::Cone => {
            format!("to avoid a collision with the {}", actor.describe())
        }
    }
}

/// Junction notice: a one-sentence summary of the per-actor junction flags,
/// present only when approaching a junction.
pub fn junction_notice(frame: &SceneFrame, cfg: &CommentaryConfig) -> Option<String> {
    let junction = frame.context.junction.as_ref()?;
    let d = junction.distance_to_junction;
    if d <= 0.0 || d > cfg.junction_distance {
        return None;
    }
    let actors = &junction.actors;
    let notice = if actors.iter().any(|a| !a.inside && !a.stopped) {
        "pay attention to the vehicles coming towards the junction"
    } else if actors
        .iter()
        .any(|a| a.inside && !a.stopped && !a.moving_away)
    {
        "pay attention to the vehicle in the junction"
    } else if actors.iter().any(|a| a.inside && a.moving_away) {
        "the other vehicles are stopped at the junction and the vehicle in the junction is moving away"
    } else {
        "the other vehicles are stopped at the junction and the junction is clear"
    };
    Some(notice.to_string())
}

fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Assemble the full label: route action, speed action with reason, and
/// the junction notice when present.
pub fn label_frame(frame: &SceneFrame, cfg: &CommentaryConfig) -> CommentaryLabel {
    let route = route_action(frame);
    let action = speed_action(frame, cfg);
    let reason = speed_reason(frame, action, cfg);
    let notice = junction_notice(frame, cfg);
    let speed_sentence = if action == SpeedAction::WaitForGap {
        format!("{}.", action.phrase())
    } else {
        format!("{} {}.", action.phrase(), reason)
    };
    let mut full_text = format!("{route} {speed_sentence}");
    if let Some(n) = &notice {
        full_text.push(' ');
        full_text.push_str(&capitalize(n));
        full_text.push('.');
    }
    CommentaryLabel {
        route_action: route,
        speed_action: action,
        speed_reason: reason,
        junction_notice: notice,
        full_text,
    }
}
