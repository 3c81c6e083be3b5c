//! Synthetic scene construction for examples, tests, and benchmarks.
//!
//! Frames are built ego-local with exact dense-path spacing and an expert
//! trajectory that ramps from the current speed toward a target under the
//! usual acceleration limits.

use crate::geom::{Pose, Vec2};
use crate::scene::{
    resample_path, ActorClass, ActorState, ActorTrack, DeviationPhase, EgoState, FrameContext,
    HazardDirection, IdmLeader, JunctionActor, JunctionContext, LaneInfo, LaneType, LightState,
    OrientedBox, RouteSpec, ScenarioType, SceneFrame, StopLine, StopLineKind, Trajectory,
    DEFAULT_PATH_WP_COUNT, DEFAULT_SPEED_WP_COUNT, DENSE_PATH_SPACING,
};

#[derive(Debug, Clone)]
struct ActorProto {
    id: String,
    class: ActorClass,
    color: Option<String>,
    subtype: Option<String>,
    pose: Pose,
    speed: f64,
    half_extents: (f64, f64),
    light_state: Option<LightState>,
}

#[derive(Debug, Clone)]
enum Road {
    Straight {
        length: f64,
    },
    Arc {
        radius: f64,
        length: f64,
        left: bool,
    },
}

/// Builder for a single synthetic [`SceneFrame`].
#[derive(Debug, Clone)]
pub struct FrameBuilder {
    frame_id: u64,
    timestamp: f64,
    dt: f64,
    speed: f64,
    wheelbase: f64,
    road: Road,
    lane_width: f64,
    left_lanes: Vec<LaneType>,
    right_lanes: Vec<LaneType>,
    speed_limit: f64,
    expert_target: Option<f64>,
    horizon: usize,
    actors: Vec<ActorProto>,
    context: FrameContext,
}

impl FrameBuilder {
    pub fn new(frame_id: u64) -> Self {
        Self {
            frame_id,
            timestamp: 0.0,
            dt: 0.25,
            speed: 5.0,
            wheelbase: 2.9,
            road: Road::Straight { length: 60.0 },
            lane_width: 3.5,
            left_lanes: Vec::new(),
            right_lanes: Vec::new(),
            speed_limit: 8.33,
            expert_target: None,
            horizon: 10,
            actors: Vec::new(),
            context: FrameContext::default(),
        }
    }

    pub fn timestamp(mut self, t: f64) -> Self {
        self.timestamp = t;
        self
    }

    pub fn ego_speed(mut self, v: f64) -> Self {
        self.speed = v;
        self
    }

    pub fn speed_limit(mut self, v: f64) -> Self {
        self.speed_limit = v;
        self
    }

    /// Expert target speed; the synthetic expert ramps toward it.
    pub fn expert_target(mut self, v: f64) -> Self {
        self.expert_target = Some(v);
        self
    }

    pub fn straight_route(mut self, length: f64) -> Self {
        self.road = Road::Straight { length };
        self
    }

    /// Constant-curvature route. `left` turns counterclockwise.
    pub fn arc_route(mut self, radius: f64, length: f64, left: bool) -> Self {
        self.road = Road::Arc {
            radius,
            length,
            left,
        };
        self
    }

    pub fn lane_width(mut self, w: f64) -> Self {
        self.lane_width = w;
        self
    }

    pub fn lanes(mut self, left: Vec<LaneType>, right: Vec<LaneType>) -> Self {
        self.left_lanes = left;
        self.right_lanes = right;
        self
    }

    /// Recorded future horizon for every actor, in ticks.
    pub fn horizon(mut self, steps: usize) -> Self {
        self.horizon = steps;
        self
    }

    fn push_actor(mut self, proto: ActorProto) -> Self {
        self.actors.push(proto);
        self
    }

    pub fn cone_ahead(self, id: &str, x: f64, y: f64) -> Self {
        self.push_actor(ActorProto {
            id: id.into(),
            class: ActorClass::Cone,
            color: None,
            subtype: None,
            pose: Pose::new(x, y, 0.0),
            speed: 0.0,
            half_extents: (0.25, 0.25),
            light_state: None,
        })
    }

    pub fn static_obstacle(self, id: &str, x: f64, y: f64, half: (f64, f64)) -> Self {
        self.push_actor(ActorProto {
            id: id.into(),
            class: ActorClass::StaticObstacle,
            color: None,
            subtype: None,
            pose: Pose::new(x, y, 0.0),
            speed: 0.0,
            half_extents: half,
            light_state: None,
        })
    }

    /// A vehicle at (x, y) heading `yaw`, moving at constant `speed`.
    pub fn vehicle(self, id: &str, x: f64, y: f64, yaw: f64, speed: f64) -> Self {
        self.push_actor(ActorProto {
            id: id.into(),
            class: ActorClass::Vehicle,
            color: Some("red".into()),
            subtype: Some("SUV".into()),
            pose: Pose::new(x, y, yaw),
            speed,
            half_extents: (2.4, 1.0),
            light_state: None,
        })
    }

    pub fn pedestrian(self, id: &str, x: f64, y: f64, yaw: f64, speed: f64) -> Self {
        self.push_actor(ActorProto {
            id: id.into(),
            class: ActorClass::Pedestrian,
            color: None,
            subtype: None,
            pose: Pose::new(x, y, yaw),
            speed,
            half_extents: (0.3, 0.3),
            light_state: None,
        })
    }

    /// Traffic light plus its stop line across the route at `x`.
    pub fn traffic_light(mut self, id: &str, x: f64, state: LightState) -> Self {
        self.context.stop_lines.push(StopLine {
            kind: StopLineKind::RedLight,
            p0: Vec2::new(x, -4.0),
            p1: Vec2::new(x, 4.0),
            actor_id: Some(id.into()),
        });
        self.push_actor(ActorProto {
            id: id.into(),
            class: ActorClass::TrafficLight,
            color: None,
            subtype: None,
            pose: Pose::new(x, 5.0, 0.0),
            speed: 0.0,
            half_extents: (0.3, 0.3),
            light_state: Some(state),
        })
    }

    /// Stop sign plus its stop line across the route at `x`.
    pub fn stop_sign(mut self, id: &str, x: f64) -> Self {
        self.context.stop_lines.push(StopLine {
            kind: StopLineKind::StopSign,
            p0: Vec2::new(x, -4.0),
            p1: Vec2::new(x, 4.0),
            actor_id: Some(id.into()),
        });
        self.push_actor(ActorProto {
            id: id.into(),
            class: ActorClass::StopSign,
            color: None,
            subtype: None,
            pose: Pose::new(x, 4.0, 0.0),
            speed: 0.0,
            half_extents: (0.2, 0.2),
            light_state: None,
        })
    }

    pub fn junction(mut self, distance: f64, actors: Vec<JunctionActor>) -> Self {
        self.context.junction = Some(JunctionContext {
            distance_to_junction: distance,
            actors,
        });
        self
    }

    pub fn idm_leader(mut self, actor_id: &str, distance: f64, target_speed: f64) -> Self {
        self.context.idm_leader = Some(IdmLeader {
            actor_id: actor_id.into(),
            distance,
            expert_target_speed: target_speed,
        });
        self
    }

    pub fn deviation(mut self, scenario: ScenarioType, phase: DeviationPhase) -> Self {
        self.context.scenario_type = Some(scenario);
        self.context.deviation_phase = Some(phase);
        self
    }

    pub fn expert_accel(mut self, a: f64) -> Self {
        self.context.expert_accel = Some(a);
        self
    }

    pub fn expert_steer(mut self, s: f64) -> Self {
        self.context.expert_steer = Some(s);
        self
    }

    pub fn vehicle_hazard(mut self, dir: HazardDirection) -> Self {
        self.context.vehicle_hazard = Some(dir);
        self
    }

    pub fn walker_hazard(mut self) -> Self {
        self.context.walker_hazard = true;
        self
    }

    pub fn town(mut self, name: &str) -> Self {
        self.context.town = Some(name.into());
        self
    }

    fn dense_path(&self) -> Vec<Pose> {
        match self.road {
            Road::Straight { length } => {
                let n = (length / DENSE_PATH_SPACING).round() as usize;
                (0..=n)
                    .map(|i| Pose::new(i as f64 * DENSE_PATH_SPACING, 0.0, 0.0))
                    .collect()
            }
            Road::Arc {
                radius,
                length,
                left,
            } => {
                // chord-exact placement: every consecutive pair is exactly
                // one dense spacing apart regardless of curvature
                let theta = 2.0 * (0.5 * DENSE_PATH_SPACING / radius).asin();
                let n = (length / DENSE_PATH_SPACING).round() as usize;
                let sign = if left { 1.0 } else { -1.0 };
                (0..=n)
                    .map(|i| {
                        let a = i as f64 * theta;
                        Pose::new(radius * a.sin(), sign * radius * (1.0 - a.cos()), sign * a)
                    })
                    .collect()
            }
        }
    }

    fn expert_trajectory(&self, dense: &[Pose]) -> Trajectory {
        let target = self.expert_target.unwrap_or(self.speed);
        let positions: Vec<Vec2> = dense.iter().map(|p| p.position()).collect();
        let mut speed_wps = Vec::with_capacity(DEFAULT_SPEED_WP_COUNT);
        let mut v = self.speed;
        let mut s = 0.0;
        speed_wps.push(crate::geom::point_at_arc(&positions, 0.0));
        for _ in 1..DEFAULT_SPEED_WP_COUNT {
            let dv = (target - v).clamp(-6.0 * self.dt, 3.0 * self.dt);
            v = (v + dv).max(0.0);
            s += v * self.dt;
            speed_wps.push(crate::geom::point_at_arc(&positions, s));
        }
        let path_wps = resample_path(dense, crate::scene::PATH_WP_SPACING)
            .map(|pts| {
                pts.iter()
                    .skip(1)
                    .take(DEFAULT_PATH_WP_COUNT)
                    .map(|p| p.position())
                    .collect()
            })
            .unwrap_or_else(|_| vec![*positions.last().unwrap()]);
        Trajectory {
            speed_wps,
            path_wps,
        }
    }

    pub fn build(self) -> SceneFrame {
        let dense = self.dense_path();
        let expert = self.expert_trajectory(&dense);
        let total_length = (dense.len() - 1) as f64 * DENSE_PATH_SPACING;
        let actors = self
            .actors
            .iter()
            .map(|p| {
                let step = Vec2::new(p.speed * self.dt, 0.0).rotated(p.pose.yaw);
                let future = (1..=self.horizon)
                    .map(|k| ActorState {
                        pose: Pose::new(
                            p.pose.x + step.x * k as f64,
                            p.pose.y + step.y * k as f64,
                            p.pose.yaw,
                        ),
                        speed: p.speed,
                    })
                    .collect();
                ActorTrack {
                    id: p.id.clone(),
                    class: p.class,
                    color: p.color.clone(),
                    subtype: p.subtype.clone(),
                    pose: p.pose,
                    speed: p.speed,
                    half_extents: p.half_extents,
                    light_state: p.light_state,
                    future,
                }
            })
            .collect();
        SceneFrame {
            frame_id: self.frame_id,
            timestamp: self.timestamp,
            dt_record: self.dt,
            ego: EgoState {
                pose: Pose::new(0.0, 0.0, 0.0),
                speed: self.speed,
                wheelbase: self.wheelbase,
                bbox: OrientedBox::new(Pose::new(1.3, 0.0, 0.0), 2.3, 0.95),
            },
            actors,
            route: RouteSpec {
                dense_path: dense,
                target_points: vec![Vec2::new(total_length, 0.0)],
                hlc: None,
                lane_info: LaneInfo {
                    lane_width: self.lane_width,
                    left: self.left_lanes,
                    right: self.right_lanes,
                },
                total_length,
            },
            expert,
            speed_limit: self.speed_limit,
            context: self.context,
        }
    }
}
