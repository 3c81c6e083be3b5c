//! Rule-based commentary for a handful of characteristic situations.

use onrails::commentary::{label_frame, CommentaryConfig};
use onrails::scene::{DeviationPhase, JunctionActor, LightState, ScenarioType};
use onrails::synth::FrameBuilder;

fn main() {
    let cfg = CommentaryConfig::default();
    let situations = vec![
        (
            "cruising on an empty road",
            FrameBuilder::new(0)
                .ego_speed(8.33)
                .expert_target(8.33)
                .build(),
        ),
        (
            "pulling away from a stop",
            FrameBuilder::new(1)
                .ego_speed(0.0)
                .expert_target(8.0)
                .build(),
        ),
        (
            "red light ahead",
            FrameBuilder::new(2)
                .ego_speed(6.0)
                .expert_target(0.0)
                .traffic_light("tl", 15.0, LightState::Red)
                .idm_leader("tl", 15.0, 0.0)
                .build(),
        ),
        (
            "following a slower vehicle",
            FrameBuilder::new(3)
                .ego_speed(7.0)
                .expert_target(4.0)
                .vehicle("suv", 12.0, 0.0, 0.0, 4.0)
                .idm_leader("suv", 12.0, 4.0)
                .build(),
        ),
        (
            "passing a construction site",
            FrameBuilder::new(4)
                .ego_speed(4.0)
                .expert_target(4.0)
                .speed_limit(12.0)
                .deviation(ScenarioType::ConstructionObstacle, DeviationPhase::During)
                .build(),
        ),
        (
            "waiting before a junction",
            FrameBuilder::new(5)
                .ego_speed(5.0)
                .expert_target(5.0)
                .junction(
                    10.0,
                    vec![JunctionActor {
                        actor_id: "v1".into(),
                        inside: true,
                        stopped: false,
                        moving_away: false,
                    }],
                )
                .build(),
        ),
    ];

    for (name, frame) in situations {
        let label = label_frame(&frame, &cfg);
        println!("{name}:\n  {}\n", label.full_text);
    }
}
